import { describe, expect, it } from "vitest";

import { GridSelection } from "../src/gridSelect.js";

describe("GridSelection", () => {
  it("toggling a cell twice leaves it unselected", () => {
    const g = new GridSelection();
    expect(g.toggle(3, 4)).toBe(true);
    expect(g.isSelected(3, 4)).toBe(true);
    expect(g.toggle(3, 4)).toBe(false);
    expect(g.isSelected(3, 4)).toBe(false);
    expect(g.count()).toBe(0);
  });

  it("blocks saving zero boxes client-side", () => {
    const g = new GridSelection();
    expect(g.canSave()).toBe(false);
    g.toggle(0, 0);
    expect(g.canSave()).toBe(true);
  });

  it("maps image pixels to cells", () => {
    const g = new GridSelection();
    g.toggleAtPixel(300, 520); // col 1, row 2
    expect(g.isSelected(2, 1)).toBe(true);
  });

  it("emits draft boxes in (row, col) order", () => {
    const g = new GridSelection();
    g.toggle(5, 1);
    g.toggle(0, 7);
    g.toggle(5, 0);
    expect(g.draftBoxes()).toEqual([
      { row: 0, col: 7 },
      { row: 5, col: 0 },
      { row: 5, col: 1 },
    ]);
  });

  it("rejects out-of-grid cells", () => {
    expect(() => new GridSelection().toggle(12, 0)).toThrow(RangeError);
  });
});
