/**
 * Editing session for one site: the mode machine (grid selection, then
 * point marking, then quality check) plus the dirty flag the UI uses to
 * warn about unsaved work. Boxes always come before points.
 */

export type Mode = "grid_select" | "point_mark" | "quality_check";

const NEXT: Record<Mode, Mode[]> = {
  grid_select: ["point_mark"],
  point_mark: ["grid_select", "quality_check"],
  quality_check: ["grid_select", "point_mark"],
};

export class UiSession {
  mode: Mode = "grid_select";
  dirty = false;

  constructor(public siteId: string) {}

  canEnter(mode: Mode): boolean {
    return NEXT[this.mode].includes(mode);
  }

  enter(mode: Mode): void {
    if (!this.canEnter(mode)) {
      throw new Error(`cannot move from ${this.mode} to ${mode}`);
    }
    this.mode = mode;
  }

  markDirty(): void {
    this.dirty = true;
  }

  markSaved(): void {
    this.dirty = false;
  }
}
