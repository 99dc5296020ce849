"""Grid prompt model and point-prompt machinery.

The 3072 px site image is tiled by a 12x12 grid of 256 px cells. A box
prompt selects a cell; each selected cell carries one or more point prompts
inside it. Point distributions are encoded as unit-height Gaussian heatmaps,
and :func:`find_peaks` recovers point prompts from any heatmap, whether
rendered here or predicted by an external network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

GRID_CELLS = 12
CELL_SIZE = 256
IMAGE_SIZE = GRID_CELLS * CELL_SIZE  # 3072

PROVENANCES = frozenset({"manual", "auto", "baseline_center", "baseline_density"})

DEFAULT_SIGMA = 8.0


@dataclass(frozen=True, order=True)
class GridIndex:
    row: int
    col: int

    def __post_init__(self):
        if not (0 <= self.row < GRID_CELLS and 0 <= self.col < GRID_CELLS):
            raise ValueError(f"grid index ({self.row}, {self.col}) outside 12x12 grid")


@dataclass(frozen=True)
class BoxPrompt:
    grid: GridIndex

    @property
    def rect(self) -> tuple[int, int, int, int]:
        return grid_rect(self.grid)


@dataclass(frozen=True)
class PointPrompt:
    grid: GridIndex
    x: int
    y: int


@dataclass
class PromptSet:
    site_id: str
    boxes: list[BoxPrompt] = field(default_factory=list)
    points: list[PointPrompt] = field(default_factory=list)
    provenance: str = "manual"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


def grid_rect(g: GridIndex) -> tuple[int, int, int, int]:
    """Pixel rectangle (x0, y0, x1, y1) of a grid cell, half-open."""
    x0 = CELL_SIZE * g.col
    y0 = CELL_SIZE * g.row
    return (x0, y0, x0 + CELL_SIZE, y0 + CELL_SIZE)


def grid_of_point(x: float, y: float) -> GridIndex:
    """Grid cell containing an image pixel."""
    return GridIndex(int(y) // CELL_SIZE, int(x) // CELL_SIZE)


def validate(ps: PromptSet) -> list[str]:
    """Check PromptSet invariants; returns human-readable violations,
    empty when valid. Never raises."""
    violations: list[str] = []
    seen: set[GridIndex] = set()
    for box in ps.boxes:
        if box.grid in seen:
            violations.append(f"duplicate box ({box.grid.row},{box.grid.col})")
        seen.add(box.grid)
    boxed = {b.grid for b in ps.boxes}
    pointed: set[GridIndex] = set()
    for p in ps.points:
        x0, y0, x1, y1 = grid_rect(p.grid)
        if not (x0 <= p.x < x1 and y0 <= p.y < y1):
            violations.append(
                f"point ({p.x},{p.y}) outside its declared cell ({p.grid.row},{p.grid.col})"
            )
        if p.grid not in boxed:
            violations.append(
                f"point ({p.x},{p.y}) declares cell ({p.grid.row},{p.grid.col}) with no box"
            )
        pointed.add(p.grid)
    for box in ps.boxes:
        if box.grid not in pointed:
            violations.append(f"box without point ({box.grid.row},{box.grid.col})")
    return violations


@dataclass
class Heatmap:
    """Scalar field in [0, 1]; unit value marks a desired point prompt."""

    values: np.ndarray
    sigma: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("heatmap must be 2-D")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("heatmap values must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        self.values = v


@dataclass(frozen=True)
class PeakParams:
    threshold: float = 0.5
    min_separation: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.min_separation < 1:
            raise ValueError("min_separation must be >= 1 px")


def _xy(p) -> tuple[float, float]:
    if hasattr(p, "x"):
        return float(p.x), float(p.y)
    return float(p[0]), float(p[1])


def render_heatmap(points: Iterable, sigma: float = DEFAULT_SIGMA,
                   extent: tuple[int, int] = (IMAGE_SIZE, IMAGE_SIZE)) -> Heatmap:
    """Max-combined unit Gaussians centered on the points.

    value(p) = max_q exp(-|p - q|^2 / (2 sigma^2)); the max combination keeps
    the field in [0, 1] with an exact 1.0 at every generating point.
    ``extent`` is (height, width); points are (x, y) pairs or PointPrompts.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    h, w = extent
    values = np.zeros((h, w), dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    inv = 1.0 / (2.0 * sigma * sigma)
    for p in points:
        px, py = _xy(p)
        if not (0 <= px < w and 0 <= py < h):
            raise ValueError(f"point ({px}, {py}) outside extent {extent}")
        d2 = (ys - py)[:, None] ** 2 + (xs - px)[None, :] ** 2
        np.maximum(values, np.exp(-d2 * inv), out=values)
    return Heatmap(values, sigma)


def find_peaks(h: Heatmap, p: PeakParams | None = None) -> list[tuple[int, int]]:
    """Extract point prompts from a heatmap.

    Candidates are pixels at least as large as all 8 neighbours with value
    >= threshold. They are visited by value descending (ties by (y, x)
    ascending) and greedily accepted unless within ``min_separation``
    (Euclidean, inclusive) of an already accepted peak. Returns integer
    (x, y) points in acceptance order; deterministic.
    """
    p = p or PeakParams(min_separation=h.sigma)
    v = h.values
    padded = np.pad(v, 1, constant_values=-np.inf)
    is_max = np.ones_like(v, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            shifted = padded[1 + dy:1 + dy + v.shape[0], 1 + dx:1 + dx + v.shape[1]]
            is_max &= v >= shifted
    cand = is_max & (v >= p.threshold)
    ys, xs = np.nonzero(cand)
    if ys.size == 0:
        return []
    vals = v[ys, xs]
    order = np.lexsort((xs, ys, -vals))
    min_sep2 = p.min_separation * p.min_separation
    accepted: list[tuple[int, int]] = []
    for i in order:
        cx, cy = int(xs[i]), int(ys[i])
        if all((cx - ax) ** 2 + (cy - ay) ** 2 > min_sep2 for ax, ay in accepted):
            accepted.append((cx, cy))
    return accepted


def baseline_center(boxes: Sequence[BoxPrompt], site_id: str = "") -> PromptSet:
    """Comparison scheme: one point per box at the cell center."""
    points = []
    for b in boxes:
        x0, y0, _, _ = grid_rect(b.grid)
        points.append(PointPrompt(b.grid, x0 + CELL_SIZE // 2, y0 + CELL_SIZE // 2))
    return PromptSet(site_id, list(boxes), points, provenance="baseline_center")


def _box_blur(a: np.ndarray, radius: int) -> np.ndarray:
    """Mean filter over a (2r+1)^2 window clipped to the array; each output
    is normalized by the in-bounds window size."""
    h, w = a.shape
    # summed-area table with a zero border
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=sat[1:, 1:])
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - radius, 0, h)
    y1 = np.clip(ys + radius + 1, 0, h)
    x0 = np.clip(xs - radius, 0, w)
    x1 = np.clip(xs + radius + 1, 0, w)
    total = (
        sat[np.ix_(y1, x1)] - sat[np.ix_(y0, x1)] - sat[np.ix_(y1, x0)] + sat[np.ix_(y0, x0)]
    )
    count = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return total / count


def baseline_density(image: np.ndarray, boxes: Sequence[BoxPrompt],
                     site_id: str = "", sigma: float = DEFAULT_SIGMA) -> PromptSet:
    """Comparison scheme: per box, one point at the maximum of the box-blurred
    gradient magnitude of the cell (ties resolved by (y, x) ascending)."""
    pixels = getattr(image, "pixels", image)
    pixels = np.asarray(pixels)
    gray = pixels.mean(axis=2) if pixels.ndim == 3 else pixels.astype(np.float64)
    points = []
    for b in boxes:
        x0, y0, x1, y1 = grid_rect(b.grid)
        cell = gray[y0:y1, x0:x1].astype(np.float64)
        gy, gx = np.gradient(cell)
        mag = np.hypot(gx, gy)
        blurred = _box_blur(mag, int(round(sigma)))
        # quantize so symmetric ties resolve by (y, x) order, not fp noise
        flat = int(np.argmax(np.round(blurred, 6)))
        cy, cx = divmod(flat, cell.shape[1])
        points.append(PointPrompt(b.grid, x0 + cx, y0 + cy))
    return PromptSet(site_id, list(boxes), points, provenance="baseline_density")


def to_json_dict(ps: PromptSet) -> dict:
    return {
        "site": ps.site_id,
        "provenance": ps.provenance,
        "boxes": [{"row": b.grid.row, "col": b.grid.col} for b in ps.boxes],
        "points": [
            {"row": p.grid.row, "col": p.grid.col, "x": p.x, "y": p.y} for p in ps.points
        ],
    }


def from_json_dict(doc: dict) -> PromptSet:
    boxes = [BoxPrompt(GridIndex(b["row"], b["col"])) for b in doc.get("boxes", [])]
    points = [
        PointPrompt(GridIndex(p["row"], p["col"]), int(p["x"]), int(p["y"]))
        for p in doc.get("points", [])
    ]
    return PromptSet(doc.get("site", ""), boxes, points, doc.get("provenance", "manual"))


def save_prompts(ps: PromptSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(ps), indent=2, sort_keys=True) + "\n")


def load_prompts(path: str | Path) -> PromptSet:
    return from_json_dict(json.loads(Path(path).read_text()))
