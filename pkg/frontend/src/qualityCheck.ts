/**
 * Quality-check editor state. The client is deliberately thin: every edit
 * is an API call and the local element list is replaced by whatever the
 * server answers, so displayed geometry always byte-equals the server
 * record. Local previews (drag ghosts) never touch this store.
 */

import type { SiteApi } from "./api.js";
import type { ElementDoc, ElementKind, Vertex } from "./types.js";

export class QualityCheckEditor {
  elements = new Map<string, ElementDoc>();
  selection = new Set<string>();

  constructor(
    private api: SiteApi,
    private siteId: string,
  ) {}

  async load(): Promise<void> {
    const { elements } = await this.api.listElements(this.siteId);
    this.elements = new Map(elements.map((e) => [e.id, e]));
    this.selection.clear();
  }

  list(): ElementDoc[] {
    return [...this.elements.values()];
  }

  get(eid: string): ElementDoc | undefined {
    return this.elements.get(eid);
  }

  select(eid: string, additive = false): void {
    if (!additive) this.selection.clear();
    if (this.elements.has(eid)) this.selection.add(eid);
  }

  async create(type: ElementKind, vertices: Vertex[], label = ""): Promise<ElementDoc> {
    const { element } = await this.api.createElement(this.siteId, { type, vertices, label });
    this.elements.set(element.id, element);
    return element;
  }

  async remove(eid: string): Promise<void> {
    await this.api.deleteElement(this.siteId, eid);
    this.elements.delete(eid);
    this.selection.delete(eid);
  }

  async fragment(eid: string): Promise<ElementDoc[]> {
    const { elements } = await this.api.fragmentElement(this.siteId, eid);
    this.elements.delete(eid);
    this.selection.delete(eid);
    for (const e of elements) this.elements.set(e.id, e);
    return elements;
  }

  async merge(ids: string[]): Promise<ElementDoc> {
    const { element } = await this.api.mergeElements(this.siteId, ids);
    for (const eid of ids) {
      this.elements.delete(eid);
      this.selection.delete(eid);
    }
    this.elements.set(element.id, element);
    return element;
  }

  private async patch(
    eid: string,
    body: Parameters<SiteApi["patchElement"]>[2],
  ): Promise<ElementDoc> {
    const { element } = await this.api.patchElement(this.siteId, eid, body);
    this.elements.set(eid, element);
    return element;
  }

  moveVertex(eid: string, index: number, point: Vertex) {
    return this.patch(eid, { edit: { op: "move", index, point } });
  }

  insertVertex(eid: string, afterIndex: number, point: Vertex) {
    return this.patch(eid, { edit: { op: "insert", index: afterIndex, point } });
  }

  removeVertex(eid: string, index: number) {
    return this.patch(eid, { edit: { op: "delete", index } });
  }

  setType(eid: string, type: ElementKind) {
    return this.patch(eid, { type });
  }

  setLabel(eid: string, label: string) {
    return this.patch(eid, { label });
  }

  /** Infeasible half-plane of a linear-constraint triangle, for shading. */
  halfspace(eid: string) {
    return this.api.halfspace(this.siteId, eid);
  }

  export() {
    return this.api.exportSite(this.siteId);
  }
}
