/**
 * CAPTCHA-style grid selection: the 3072 px site image is divided into a
 * 12x12 grid of 256 px cells and the user toggles the cells covering the
 * foreground equipment. Saving a draft with zero boxes is blocked here,
 * before the server is ever asked.
 */

import { CELL_SIZE, GRID_CELLS, type GridRef } from "./types.js";

export class GridSelection {
  private selected = new Set<string>();

  private key(row: number, col: number): string {
    return `${row},${col}`;
  }

  toggle(row: number, col: number): boolean {
    if (row < 0 || row >= GRID_CELLS || col < 0 || col >= GRID_CELLS) {
      throw new RangeError(`cell (${row}, ${col}) outside the 12x12 grid`);
    }
    const k = this.key(row, col);
    if (this.selected.has(k)) {
      this.selected.delete(k);
      return false;
    }
    this.selected.add(k);
    return true;
  }

  /** Toggle from an image-space click. */
  toggleAtPixel(x: number, y: number): boolean {
    return this.toggle(Math.floor(y / CELL_SIZE), Math.floor(x / CELL_SIZE));
  }

  isSelected(row: number, col: number): boolean {
    return this.selected.has(this.key(row, col));
  }

  count(): number {
    return this.selected.size;
  }

  clear(): void {
    this.selected.clear();
  }

  canSave(): boolean {
    return this.selected.size > 0;
  }

  /** Draft boxes in deterministic (row, col) order. */
  draftBoxes(): GridRef[] {
    return [...this.selected]
      .map((k) => k.split(",").map(Number) as [number, number])
      .sort((a, b) => a[0] - b[0] || a[1] - b[1])
      .map(([row, col]) => ({ row, col }));
  }
}
