"""Pluggable promptable-segmentation backends.

A backend answers one grid cell at a time: 256x256 RGB crop + box + point
prompts in, binary mask out. ``segment_site`` fans the selected grid cells
out with bounded parallelism and ORs the per-cell masks into one
full-resolution site mask. Three backends ship here:

* ``mock_floodfill``: deterministic color flood fill from each point prompt,
  clipped to the box; stands in for a real model in tests and demos.
* ``fixture``: replays masks stored on disk per grid cell.
* ``remote``: speaks the HTTP wire protocol (POST {endpoint}/segment with
  base64 PNGs) to an external model server.
"""

from __future__ import annotations

import base64
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests
from PIL import Image
from scipy import ndimage

from smartscan.errors import BackendError, MissingFixtureError
from smartscan.prompts import CELL_SIZE, PromptSet, grid_rect, validate

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


@dataclass
class SegmentationRequest:
    crop: np.ndarray  # 256x256x3 uint8
    box: tuple[int, int, int, int]  # (x0, y0, x1, y1) in crop coordinates
    points: list[tuple[int, int]]  # in crop coordinates
    grid: tuple[int, int] | None = None  # (row, col) identity for errors/fixtures

    def __post_init__(self):
        self.crop = np.asarray(self.crop, dtype=np.uint8)
        if self.crop.shape != (CELL_SIZE, CELL_SIZE, 3):
            raise ValueError(f"crop must be {CELL_SIZE}x{CELL_SIZE}x3, got {self.crop.shape}")
        x0, y0, x1, y1 = self.box
        if not (0 <= x0 < x1 <= CELL_SIZE and 0 <= y0 < y1 <= CELL_SIZE):
            raise ValueError(f"box {self.box} outside crop")
        for x, y in self.points:
            if not (x0 <= x < x1 and y0 <= y < y1):
                raise ValueError(f"point ({x}, {y}) outside box {self.box}")


@dataclass
class SegmentationResponse:
    mask: np.ndarray  # 256x256 values {0, 1}

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.shape != (CELL_SIZE, CELL_SIZE):
            raise ValueError(f"mask must be {CELL_SIZE}x{CELL_SIZE}, got {m.shape}")
        # probability responses are thresholded at 0.5
        self.mask = (m.astype(np.float64) >= 0.5).astype(np.uint8)


@dataclass
class BackendDescriptor:
    kind: str = "mock_floodfill"  # mock_floodfill | fixture | remote
    endpoint: str | None = None
    color_tolerance: float = 10.0
    parallelism: int = 8
    fixture_dir: str | Path | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("mock_floodfill", "fixture", "remote"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")
        if self.kind == "fixture" and not self.fixture_dir:
            raise ValueError("fixture backend requires fixture_dir")
        if self.color_tolerance < 0:
            raise ValueError("color_tolerance must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


# -------------------------------------------------------------- PNG helpers


def mask_to_png_b64(mask: np.ndarray) -> str:
    """Binary mask -> base64 of a single-channel PNG with values {0, 255}."""
    img = Image.fromarray((np.asarray(mask) != 0).astype(np.uint8) * 255, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def png_b64_to_mask(data: str) -> np.ndarray:
    """Inverse of :func:`mask_to_png_b64`; any nonzero value is foreground."""
    img = Image.open(io.BytesIO(base64.b64decode(data))).convert("L")
    return (np.asarray(img) != 0).astype(np.uint8)


def rgb_to_png_b64(pixels: np.ndarray) -> str:
    img = Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def png_b64_to_rgb(data: str) -> np.ndarray:
    img = Image.open(io.BytesIO(base64.b64decode(data))).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


# ----------------------------------------------------------------- backends


def _floodfill_mask(req: SegmentationRequest, tolerance: float) -> np.ndarray:
    """Union over point prompts of the 4-connected flood fill of pixels whose
    RGB distance from the seed's color is within tolerance, clipped to box."""
    x0, y0, x1, y1 = req.box
    region = req.crop[y0:y1, x0:x1].astype(np.float64)
    out = np.zeros(req.crop.shape[:2], dtype=np.uint8)
    for px, py in req.points:
        seed = req.crop[py, px].astype(np.float64)
        close = np.sqrt(((region - seed) ** 2).sum(axis=2)) <= tolerance
        labels, n = ndimage.label(close, structure=_FOUR)
        lab = labels[py - y0, px - x0]
        if lab:
            out[y0:y1, x0:x1] |= (labels == lab).astype(np.uint8)
    return out


def _fixture_mask(req: SegmentationRequest, fixture_dir) -> np.ndarray:
    if req.grid is None:
        raise MissingFixtureError("fixture backend needs a grid identity", None)
    row, col = req.grid
    path = Path(fixture_dir) / f"{row}_{col}.png"
    if not path.exists():
        raise MissingFixtureError(f"no stored mask at {path}", req.grid)
    mask = (np.asarray(Image.open(path).convert("L")) != 0).astype(np.uint8)
    return mask


def _remote_mask(req: SegmentationRequest, b: BackendDescriptor) -> np.ndarray:
    body = {
        "crop_png_b64": rgb_to_png_b64(req.crop),
        "box": list(req.box),
        "points": [[int(x), int(y)] for x, y in req.points],
    }
    try:
        resp = requests.post(f"{b.endpoint}/segment", json=body, timeout=b.timeout)
    except requests.RequestException as exc:
        raise BackendError(f"segment request failed: {exc}", req.grid) from exc
    if resp.status_code != 200:
        raise BackendError(
            f"segment request returned HTTP {resp.status_code}: {resp.text[:200]}", req.grid
        )
    try:
        mask = png_b64_to_mask(resp.json()["mask_png_b64"])
    except (KeyError, ValueError) as exc:
        raise BackendError(f"malformed segment response: {exc}", req.grid) from exc
    return mask


def segment_grid(req: SegmentationRequest, b: BackendDescriptor) -> SegmentationResponse:
    """Answer one grid cell with the configured backend."""
    if b.kind == "mock_floodfill":
        mask = _floodfill_mask(req, b.color_tolerance)
    elif b.kind == "fixture":
        mask = _fixture_mask(req, b.fixture_dir)
    else:
        mask = _remote_mask(req, b)
    try:
        return SegmentationResponse(mask)
    except ValueError as exc:
        raise BackendError(str(exc), req.grid) from exc


def segment_site(img, ps: PromptSet, b: BackendDescriptor) -> np.ndarray:
    """Segment every prompted grid cell and OR the responses into one mask.

    The output shape matches the site image; cells without a box stay 0.
    Fan-out is bounded by ``b.parallelism``; results are assembled in box
    order, so the mask does not depend on completion order. The first
    backend failure (in box order) aborts the extraction.
    """
    violations = validate(ps)
    if violations:
        raise ValueError("invalid prompt set: " + "; ".join(violations))
    pixels = np.asarray(getattr(img, "pixels", img))
    out = np.zeros(pixels.shape[:2], dtype=np.uint8)
    by_grid: dict = {}
    for p in ps.points:
        by_grid.setdefault(p.grid, []).append(p)

    def run(box):
        x0, y0, x1, y1 = grid_rect(box.grid)
        pts = [(p.x - x0, p.y - y0) for p in by_grid[box.grid]]
        req = SegmentationRequest(
            crop=pixels[y0:y1, x0:x1],
            box=(0, 0, CELL_SIZE, CELL_SIZE),
            points=pts,
            grid=(box.grid.row, box.grid.col),
        )
        return segment_grid(req, b)

    with ThreadPoolExecutor(max_workers=b.parallelism) as pool:
        futures = [pool.submit(run, box) for box in ps.boxes]
        responses = []
        first_error: Exception | None = None
        for fut in futures:  # box order, so the reported failure is stable
            try:
                responses.append(fut.result())
            except Exception as exc:
                if first_error is None:
                    first_error = exc
                responses.append(None)
        if first_error is not None:
            raise first_error
    for box, resp in zip(ps.boxes, responses):
        x0, y0, x1, y1 = grid_rect(box.grid)
        out[y0:y1, x0:x1] |= resp.mask
    return out
