/**
 * Typed client for the site service REST API. Every mutation returns the
 * server's authoritative document; callers must render from these, never
 * from locally computed geometry.
 */

import type {
  ElementDoc,
  ElementKind,
  HalfspaceDoc,
  JobDoc,
  PromptSetBody,
  SiteDoc,
  Vertex,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public violations: string[] = [],
  ) {
    super(message);
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  let violations: string[] = [];
  try {
    const doc = await res.json();
    detail = doc.detail ?? JSON.stringify(doc);
    violations = doc.violations ?? [];
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(res.status, detail, violations);
}

export class SiteApi {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!res.ok) await parseError(res);
    if (res.status === 204) return undefined as T;
    return (await res.json()) as T;
  }

  createSite(body: { name: string; lat: number; lon: number; zoom: number }) {
    return this.request<{ site: SiteDoc; job: JobDoc }>("/sites", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  listSites() {
    return this.request<{ sites: SiteDoc[] }>("/sites");
  }

  getSite(id: string) {
    return this.request<{ site: SiteDoc }>(`/sites/${id}`);
  }

  imageUrl(id: string): string {
    return `${this.base}/sites/${id}/image`;
  }

  /** Resolves to the violation list: empty means saved. */
  async putPrompts(id: string, body: PromptSetBody): Promise<string[]> {
    try {
      await this.request(`/sites/${id}/prompts`, {
        method: "PUT",
        body: JSON.stringify(body),
      });
      return [];
    } catch (err) {
      if (err instanceof ApiError && err.status === 422 && err.violations.length) {
        return err.violations;
      }
      throw err;
    }
  }

  getPrompts(id: string) {
    return this.request<PromptSetBody & { site: string }>(`/sites/${id}/prompts`);
  }

  autoPrompts(id: string, mode: string, boxes?: { row: number; col: number }[]) {
    return this.request<PromptSetBody>(`/sites/${id}/prompts/auto`, {
      method: "POST",
      body: JSON.stringify({ mode, boxes }),
    });
  }

  extract(id: string) {
    return this.request<{ elements: ElementDoc[]; job: JobDoc }>(
      `/sites/${id}/extract`,
      { method: "POST" },
    );
  }

  listElements(id: string) {
    return this.request<{ elements: ElementDoc[] }>(`/sites/${id}/elements`);
  }

  getElement(id: string, eid: string) {
    return this.request<{ element: ElementDoc }>(`/sites/${id}/elements/${eid}`);
  }

  createElement(id: string, body: { type: ElementKind; vertices: Vertex[]; label?: string }) {
    return this.request<{ element: ElementDoc }>(`/sites/${id}/elements`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  deleteElement(id: string, eid: string) {
    return this.request<void>(`/sites/${id}/elements/${eid}`, { method: "DELETE" });
  }

  fragmentElement(id: string, eid: string) {
    return this.request<{ elements: ElementDoc[] }>(
      `/sites/${id}/elements/${eid}/fragment`,
      { method: "POST" },
    );
  }

  mergeElements(id: string, ids: string[]) {
    return this.request<{ element: ElementDoc }>(`/sites/${id}/elements/merge`, {
      method: "POST",
      body: JSON.stringify({ ids }),
    });
  }

  patchElement(
    id: string,
    eid: string,
    body: {
      vertices?: Vertex[];
      edit?: { op: "move" | "insert" | "delete"; index: number; point?: Vertex };
      type?: ElementKind;
      label?: string;
    },
  ) {
    return this.request<{ element: ElementDoc }>(`/sites/${id}/elements/${eid}`, {
      method: "PATCH",
      body: JSON.stringify(body),
    });
  }

  halfspace(id: string, eid: string) {
    return this.request<HalfspaceDoc>(`/sites/${id}/elements/${eid}/halfspace`);
  }

  exportSite(id: string) {
    return this.request<{ files: Record<string, string> }>(`/sites/${id}/export`, {
      method: "POST",
    });
  }

  async exportFileText(id: string, name: string): Promise<string> {
    const res = await fetch(`${this.base}/sites/${id}/exports/${name}`);
    if (!res.ok) await parseError(res);
    return await res.text();
  }
}
