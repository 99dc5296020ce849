import math

import numpy as np
import pytest

from smartscan import prompts
from smartscan.prompts import (
    BoxPrompt,
    GridIndex,
    Heatmap,
    PeakParams,
    PointPrompt,
    PromptSet,
    baseline_center,
    baseline_density,
    find_peaks,
    grid_rect,
    render_heatmap,
    validate,
)


def test_grid_rect_corners():
    assert grid_rect(GridIndex(0, 0)) == (0, 0, 256, 256)
    assert grid_rect(GridIndex(11, 11)) == (2816, 2816, 3072, 3072)
    assert grid_rect(GridIndex(2, 3)) == (768, 512, 1024, 768)


def test_grid_rects_partition_image():
    cover = np.zeros((3072, 3072), dtype=np.int32)
    for r in range(12):
        for c in range(12):
            x0, y0, x1, y1 = grid_rect(GridIndex(r, c))
            cover[y0:y1, x0:x1] += 1
    assert cover.min() == 1 and cover.max() == 1


def test_grid_index_bounds():
    with pytest.raises(ValueError):
        GridIndex(12, 0)
    with pytest.raises(ValueError):
        GridIndex(0, -1)


def test_validate_accepts_contained_point():
    g = GridIndex(2, 3)
    ps = PromptSet("s", [BoxPrompt(g)], [PointPrompt(g, 256 * 3 + 10, 256 * 2 + 10)])
    assert validate(ps) == []


def test_validate_flags_box_without_point():
    ps = PromptSet("s", [BoxPrompt(GridIndex(1, 1))], [])
    out = validate(ps)
    assert len(out) == 1 and "box without point" in out[0]


def test_validate_flags_point_outside_cell():
    g = GridIndex(0, 0)
    ps = PromptSet("s", [BoxPrompt(g)], [PointPrompt(g, 300, 10)])
    assert any("outside its declared cell" in v for v in validate(ps))


def test_validate_flags_duplicate_box_and_orphan_point():
    g = GridIndex(4, 4)
    ps = PromptSet(
        "s",
        [BoxPrompt(g), BoxPrompt(g)],
        [PointPrompt(g, 1100, 1100), PointPrompt(GridIndex(0, 1), 300, 10)],
    )
    out = validate(ps)
    assert any("duplicate box" in v for v in out)
    assert any("no box" in v for v in out)


# ---------------------------------------------------------------- heatmaps


def test_heatmap_single_point_values():
    h = render_heatmap([(128, 128)], sigma=8.0, extent=(256, 256))
    assert h.values[128, 128] == 1.0
    assert h.values[128, 136] == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_heatmap_empty_points():
    h = render_heatmap([], sigma=8.0, extent=(64, 64))
    assert not h.values.any()


def test_heatmap_two_distant_points_midpoint():
    h = render_heatmap([(50, 100), (150, 100)], sigma=8.0, extent=(256, 256))
    expected = math.exp(-(50.0**2) / 128.0)
    assert expected < 1e-8
    assert h.values[100, 100] == pytest.approx(expected, rel=1e-9)
    assert h.values[100, 50] == 1.0
    assert h.values[100, 150] == 1.0


def test_heatmap_range_invariant():
    rng = np.random.default_rng(7)
    pts = [(int(x), int(y)) for x, y in rng.integers(0, 256, size=(40, 2))]
    h = render_heatmap(pts, sigma=4.0, extent=(256, 256))
    assert 0.0 <= h.values.min() and h.values.max() == 1.0
    for x, y in pts:
        assert h.values[y, x] == 1.0


def test_heatmap_accepts_point_prompts():
    p = PointPrompt(GridIndex(0, 0), 10, 20)
    h = render_heatmap([p], sigma=4.0, extent=(64, 64))
    assert h.values[20, 10] == 1.0


# -------------------------------------------------------------- peak finding


def _scatter(rng, k, extent, min_sep):
    """Rejection-sample k integer points with pairwise distance > min_sep."""
    pts = []
    tries = 0
    while len(pts) < k and tries < 20000:
        tries += 1
        x = int(rng.integers(0, extent[1]))
        y = int(rng.integers(0, extent[0]))
        if all((x - a) ** 2 + (y - b) ** 2 > min_sep**2 for a, b in pts):
            pts.append((x, y))
    return pts


@pytest.mark.parametrize("sigma", [4.0, 8.0, 16.0])
def test_peaks_recover_generators(sigma):
    rng = np.random.default_rng(int(sigma))
    extent = (int(32 * sigma), int(32 * sigma))
    pts = _scatter(rng, 10, extent, 4 * sigma + 1)
    assert len(pts) == 10
    h = render_heatmap(pts, sigma=sigma, extent=extent)
    peaks = find_peaks(h, PeakParams(threshold=0.5, min_separation=sigma))
    assert len(peaks) == len(pts)
    for x, y in pts:
        assert min((x - px) ** 2 + (y - py) ** 2 for px, py in peaks) <= 1.0


def test_peaks_empty_heatmap():
    h = Heatmap(np.zeros((64, 64)), sigma=8.0)
    assert find_peaks(h, PeakParams()) == []


def test_peaks_merge_adjacent_generators():
    h = render_heatmap([(100, 100), (101, 100)], sigma=8.0, extent=(256, 256))
    peaks = find_peaks(h, PeakParams(threshold=0.5, min_separation=8.0))
    assert peaks == [(100, 100)]


def test_peaks_deterministic():
    rng = np.random.default_rng(3)
    pts = _scatter(rng, 12, (512, 512), 20)
    h = render_heatmap(pts, sigma=5.0, extent=(512, 512))
    p = PeakParams(threshold=0.4, min_separation=5.0)
    assert find_peaks(h, p) == find_peaks(h, p)


def test_peaks_monotone_suppression():
    rng = np.random.default_rng(11)
    pts = _scatter(rng, 15, (512, 512), 10)
    h = render_heatmap(pts, sigma=6.0, extent=(512, 512))
    counts = [
        len(find_peaks(h, PeakParams(threshold=0.5, min_separation=s)))
        for s in (1, 2, 4, 8, 16, 32, 64)
    ]
    assert counts == sorted(counts, reverse=True)


# ---------------------------------------------------------------- baselines


def test_baseline_center_points():
    boxes = [BoxPrompt(GridIndex(0, 0)), BoxPrompt(GridIndex(3, 5))]
    ps = baseline_center(boxes, "site")
    assert ps.provenance == "baseline_center"
    assert len(ps.points) == len(boxes)
    assert (ps.points[0].x, ps.points[0].y) == (128, 128)
    assert (ps.points[1].x, ps.points[1].y) == (5 * 256 + 128, 3 * 256 + 128)
    assert validate(ps) == []


def _brute_gradient_magnitude(cell):
    h, w = cell.shape
    gx = np.zeros_like(cell)
    gy = np.zeros_like(cell)
    for y in range(h):
        for x in range(w):
            if 0 < x < w - 1:
                gx[y, x] = (cell[y, x + 1] - cell[y, x - 1]) / 2.0
            elif x == 0:
                gx[y, x] = cell[y, 1] - cell[y, 0]
            else:
                gx[y, x] = cell[y, x] - cell[y, x - 1]
            if 0 < y < h - 1:
                gy[y, x] = (cell[y + 1, x] - cell[y - 1, x]) / 2.0
            elif y == 0:
                gy[y, x] = cell[1, x] - cell[0, x]
            else:
                gy[y, x] = cell[y, x] - cell[y - 1, x]
    return np.sqrt(gx * gx + gy * gy)


def _brute_box_blur(a, radius):
    h, w = a.shape
    padded = np.zeros((h + 2 * radius, w + 2 * radius))
    padded[radius:radius + h, radius:radius + w] = a
    ones = np.zeros_like(padded)
    ones[radius:radius + h, radius:radius + w] = 1.0
    total = np.zeros((h, w))
    count = np.zeros((h, w))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            total += padded[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
            count += ones[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
    return total / count


def test_baseline_density_uniform_cell_tie_break():
    img = np.full((3072, 3072, 3), 77, dtype=np.uint8)
    ps = baseline_density(img, [BoxPrompt(GridIndex(1, 2))], "site")
    # all gradients tie at zero, so row-major argmax picks the cell's top-left
    assert (ps.points[0].x, ps.points[0].y) == (512, 256)
    assert validate(ps) == []


def test_baseline_density_bright_square_matches_brute_force():
    img = np.zeros((3072, 3072, 3), dtype=np.uint8)
    # bright square inside cell (0, 0)
    img[60:140, 80:180] = 230
    ps = baseline_density(img, [BoxPrompt(GridIndex(0, 0))], "site")
    cell = img[0:256, 0:256].mean(axis=2)
    expected = _brute_box_blur(_brute_gradient_magnitude(cell), 8)
    ey, ex = divmod(int(np.argmax(np.round(expected, 6))), 256)
    assert (ps.points[0].x, ps.points[0].y) == (ex, ey)
    # the winner sits in the square's boundary band
    dist_to_edge = min(
        abs(ps.points[0].y - 60), abs(ps.points[0].y - 139),
        abs(ps.points[0].x - 80), abs(ps.points[0].x - 179),
    )
    assert dist_to_edge <= 10
    assert validate(ps) == []


def test_prompt_json_round_trip(tmp_path):
    g = GridIndex(2, 3)
    ps = PromptSet("demo", [BoxPrompt(g)], [PointPrompt(g, 800, 600)], "manual")
    path = tmp_path / "prompts.json"
    prompts.save_prompts(ps, path)
    back = prompts.load_prompts(path)
    assert back == ps
