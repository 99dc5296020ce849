/**
 * Point marking over drafted boxes: each selected cell needs one or more
 * point prompts inside it. Clicks outside the active cell are rejected with
 * a cue for the UI; Escape cancels an in-progress (pending) point; save
 * stays disabled until every box has a point.
 */

import { CELL_SIZE, type GridRef, type PointRef, type PromptSetBody } from "./types.js";

export type ClickResult =
  | { accepted: true; point: PointRef }
  | { accepted: false; reason: string };

export class PointMarking {
  private points: PointRef[] = [];
  private pending: PointRef | null = null;

  constructor(private boxes: GridRef[]) {
    if (boxes.length === 0) {
      throw new Error("point marking needs at least one drafted box");
    }
  }

  private cellOf(x: number, y: number): GridRef {
    return { row: Math.floor(y / CELL_SIZE), col: Math.floor(x / CELL_SIZE) };
  }

  private isBoxed(cell: GridRef): boolean {
    return this.boxes.some((b) => b.row === cell.row && b.col === cell.col);
  }

  /** Stage a point under the cursor; commit() lands it, cancel() drops it. */
  begin(x: number, y: number): ClickResult {
    const cell = this.cellOf(x, y);
    if (!this.isBoxed(cell)) {
      this.pending = null;
      return { accepted: false, reason: `cell (${cell.row}, ${cell.col}) is not a box prompt` };
    }
    this.pending = { ...cell, x: Math.round(x), y: Math.round(y) };
    return { accepted: true, point: this.pending };
  }

  commit(): PointRef | null {
    if (!this.pending) return null;
    const p = this.pending;
    this.pending = null;
    this.points.push(p);
    return p;
  }

  /** Escape key: forget the in-progress point. */
  cancel(): void {
    this.pending = null;
  }

  /** One-shot click: begin + commit. */
  click(x: number, y: number): ClickResult {
    const res = this.begin(x, y);
    if (res.accepted) this.commit();
    return res;
  }

  removeLast(): PointRef | undefined {
    return this.points.pop();
  }

  pointsIn(cell: GridRef): PointRef[] {
    return this.points.filter((p) => p.row === cell.row && p.col === cell.col);
  }

  boxesMissingPoints(): GridRef[] {
    return this.boxes.filter((b) => this.pointsIn(b).length === 0);
  }

  canSave(): boolean {
    return this.boxesMissingPoints().length === 0;
  }

  body(provenance = "manual"): PromptSetBody {
    return { provenance, boxes: this.boxes, points: [...this.points] };
  }
}
