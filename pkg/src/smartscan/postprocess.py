"""Binary mask to tight convex subspace polygons.

The chain: mean-field smoothing to drop spurious pixel islands, 8-connected
components, outer contour tracing, area filtering, convex hulls, recursive
dead-space tightening, and Ramer-Douglas-Peucker simplification.

Coordinate convention: polygons live in image pixel space, x right and
y down; a ring is "counter-clockwise" when its shoelace signed area is
positive, which is what every routine here produces and expects.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from smartscan.errors import DegenerateGeometryError

logger = logging.getLogger(__name__)

CONVEXITY_EPS = 1e-9  # tolerated negative cross product (collinearity slack)
_CLEAN_EPS = 1e-6  # producers snap near-collinear vertices below this cross


@dataclass(frozen=True)
class PostprocessParams:
    crf_iterations: int = 5
    crf_unary_confidence: float = 0.9
    crf_pairwise_weight: float = 1.0
    min_area: float = 100.0
    deadspace_tau: float = 0.3
    max_split_depth: int = 3
    rdp_epsilon: float = 2.0

    def __post_init__(self):
        if self.crf_iterations <= 0 or self.crf_pairwise_weight <= 0:
            raise ValueError("CRF iterations and pairwise weight must be positive")
        if not 0.5 < self.crf_unary_confidence < 1.0:
            raise ValueError("unary confidence must lie in (0.5, 1)")
        if self.min_area <= 0 or self.rdp_epsilon < 0:
            raise ValueError("min_area must be positive, rdp_epsilon non-negative")
        if not 0.0 < self.deadspace_tau < 1.0:
            raise ValueError("deadspace_tau must lie in (0, 1)")
        if self.max_split_depth < 0:
            raise ValueError("max_split_depth must be >= 0")


# ----------------------------------------------------------------- polygons


def signed_area(ring) -> float:
    """Shoelace signed area; positive for our counter-clockwise convention."""
    a = np.asarray(ring, dtype=np.float64)
    x, y = a[:, 0], a[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class ConvexPolygon:
    """Validated convex ring: >= 3 distinct vertices, positive orientation,
    every consecutive-edge cross product >= -1e-9."""

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        verts = [(float(x), float(y)) for x, y in vertices]
        if len(verts) < 3:
            raise DegenerateGeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        if len(set(verts)) != len(verts):
            raise DegenerateGeometryError("polygon has repeated vertices")
        if signed_area(verts) <= 0:
            raise DegenerateGeometryError("polygon is not positively oriented or has no area")
        n = len(verts)
        for i in range(n):
            o, a, b = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
            if _cross(o, a, b) < -CONVEXITY_EPS:
                raise DegenerateGeometryError(f"polygon is concave at vertex {(i + 1) % n}")
        self.vertices = tuple(verts)

    def __eq__(self, other):
        return isinstance(other, ConvexPolygon) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"ConvexPolygon({len(self.vertices)} vertices, area={self.area():.1f})"

    def __len__(self):
        return len(self.vertices)

    def area(self) -> float:
        return signed_area(self.vertices)

    def centroid(self) -> tuple[float, float]:
        """Area centroid."""
        a = np.asarray(self.vertices)
        x, y = a[:, 0], a[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        s = cross.sum()
        return (
            float(((x + xn) * cross).sum() / (3.0 * s)),
            float(((y + yn) * cross).sum() / (3.0 * s)),
        )

    def contains(self, x: float, y: float, tol: float = 1e-9) -> bool:
        """Inside-or-on test; ``tol`` is a distance slack in pixels."""
        v = self.vertices
        for i in range(len(v)):
            (x0, y0), (x1, y1) = v[i], v[(i + 1) % len(v)]
            ex, ey = x1 - x0, y1 - y0
            if (ex * (y - y0) - ey * (x - x0)) < -tol * math.hypot(ex, ey):
                return False
        return True

    def contains_many(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Vectorized :meth:`contains` over an (N, 2) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        inside = np.ones(len(pts), dtype=bool)
        v = self.vertices
        for i in range(len(v)):
            (x0, y0), (x1, y1) = v[i], v[(i + 1) % len(v)]
            ex, ey = x1 - x0, y1 - y0
            cross = ex * (pts[:, 1] - y0) - ey * (pts[:, 0] - x0)
            inside &= cross >= -tol * math.hypot(ex, ey)
        return inside


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> ConvexPolygon:
    """Monotone-chain hull, counter-clockwise, starting at the
    lexicographically least vertex; every hull vertex is an input point.

    Raises :class:`DegenerateGeometryError` below 3 distinct points or when
    all points are collinear.
    """
    pts = sorted({(float(x), float(y)) for x, y in points})
    if len(pts) < 3:
        raise DegenerateGeometryError("hull needs >= 3 distinct points")
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    ring = lower[:-1] + upper[:-1]
    if len(ring) < 3:
        raise DegenerateGeometryError("points are collinear")
    return ConvexPolygon(ring)


def clean_ring(ring, collinear_eps: float = _CLEAN_EPS) -> list[tuple[float, float]]:
    """Drop near-duplicate and near-collinear vertices so that producers of
    computed rings (clipping, joins) satisfy the strict polygon contract."""
    out: list[tuple[float, float]] = []
    for x, y in ring:
        if out and (out[-1][0] - x) ** 2 + (out[-1][1] - y) ** 2 < 1e-18:
            continue
        out.append((float(x), float(y)))
    if len(out) > 1 and (out[0][0] - out[-1][0]) ** 2 + (out[0][1] - out[-1][1]) ** 2 < 1e-18:
        out.pop()
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            o, a, b = out[i - 1], out[i], out[(i + 1) % len(out)]
            if abs(_cross(o, a, b)) <= collinear_eps:
                del out[i]
                changed = True
                break
    return out


# ------------------------------------------------------------ CRF smoothing


def crf_refine(mask: np.ndarray, prm: PostprocessParams | None = None) -> np.ndarray:
    """Mean-field smoothing on a 4-connected Potts model.

    Each pixel's unary term is the log odds of the input label at confidence
    p; disagreeing neighbours pay ``w``. Beliefs update in synchronous
    sweeps: q <- sigmoid(L + w * sum_neighbours (2 q_j - 1)) with
    L = +-ln(p / (1 - p)). The output is the argmax marginal (ties fall to
    background), which removes isolated specks while leaving solid regions
    untouched.
    """
    prm = prm or PostprocessParams()
    m = np.asarray(mask)
    if m.ndim != 2 or not np.isin(m, (0, 1)).all():
        raise ValueError("mask must be binary 2-D")
    p = prm.crf_unary_confidence
    w = prm.crf_pairwise_weight
    logit = math.log(p / (1.0 - p))
    unary = np.where(m == 1, logit, -logit)
    q = np.where(m == 1, p, 1.0 - p).astype(np.float64)
    for _ in range(prm.crf_iterations):
        field = 2.0 * q - 1.0
        padded = np.pad(field, 1)  # zero pad: absent neighbours contribute 0
        s = (
            padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
        )
        q = 1.0 / (1.0 + np.exp(-(unary + w * s)))
    return (q > 0.5).astype(np.uint8)


# --------------------------------------------------------------- components


_EIGHT = np.ones((3, 3), dtype=int)


def connected_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected foreground labeling; labels are renumbered 1..n in order
    of each component's first pixel in a row-major scan."""
    m = np.asarray(mask)
    raw, n = ndimage.label(m != 0, structure=_EIGHT)
    if n == 0:
        return raw, 0
    flat = raw.ravel()
    fg = np.flatnonzero(flat)
    uniq, first = np.unique(flat[fg], return_index=True)
    remap = np.zeros(n + 1, dtype=raw.dtype)
    remap[uniq[np.argsort(first)]] = np.arange(1, n + 1, dtype=raw.dtype)
    return remap[raw], n


# ------------------------------------------------------------------ contour

# Moore neighbourhood in clockwise screen order starting east
_MOORE = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _bbox_ring(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Unit-step ring around pixel block [x0..x1] x [y0..y1] in corner
    coordinates; the 1x1 case yields exactly the pixel's 4 square corners."""
    ring = []
    ring += [(x, y0) for x in range(x0, x1 + 2)]
    ring += [(x1 + 1, y) for y in range(y0 + 1, y1 + 2)]
    ring += [(x, y1 + 1) for x in range(x1, x0 - 1, -1)]
    ring += [(x0, y) for y in range(y1, y0, -1)]
    return ring


def trace_contour(component: np.ndarray) -> list[tuple[int, int]]:
    """Outer border of one connected component by Moore-neighbour following.

    Starts at the component's row-major-first pixel and walks the outer
    boundary; holes are ignored. Returns a closed counter-clockwise ring of
    pixel coordinates (the final vertex connects back to the first).
    Components too thin to form a ring (single pixels and dominoes) are
    promoted to the unit-square ring of their bounding box.
    """
    m = np.asarray(component) != 0
    if not m.any():
        raise ValueError("component is empty")
    ys, xs = np.nonzero(m)
    flat = int(np.argmax(m.ravel()))
    sy, sx = divmod(flat, m.shape[1])

    def fg(x, y):
        return 0 <= x < m.shape[1] and 0 <= y < m.shape[0] and m[y, x]

    ring = [(sx, sy)]
    # entered the start pixel coming from the west (row-major-first pixel
    # has background or border to its west)
    prev_dir = 4  # index of W in _MOORE
    cx, cy = sx, sy
    start_state = None
    closed = False
    for _ in range(8 * len(xs) + 8):
        # scan clockwise from the neighbour after the backtrack direction
        found = False
        for k in range(1, 9):
            d = (prev_dir + k) % 8
            nx, ny = cx + _MOORE[d][0], cy + _MOORE[d][1]
            if fg(nx, ny):
                state = (cx, cy, d)
                if start_state is None:
                    start_state = state
                elif state == start_state:
                    ring.pop()  # the walk re-emitted the start pixel
                    closed = True
                    found = True
                    break
                cx, cy = nx, ny
                ring.append((cx, cy))
                prev_dir = (d + 4) % 8  # direction back to where we came from
                found = True
                break
        if closed or not found:  # done, or isolated pixel
            break
    if len(set(ring)) < 3 or len(ring) < 3:
        x0, x1 = int(xs.min()), int(xs.max())
        y0, y1 = int(ys.min()), int(ys.max())
        return _orient_ccw(_bbox_ring(x0, y0, x1, y1))
    if ring[0] == ring[-1]:
        ring = ring[:-1]
    return _orient_ccw(ring)


def _orient_ccw(ring: list[tuple[int, int]]) -> list[tuple[int, int]]:
    if signed_area(ring) < 0:
        return [ring[0]] + ring[1:][::-1]
    return ring


def filter_small(contours, min_area: float):
    """Keep contours whose shoelace area is >= min_area (ties kept)."""
    return [c for c in contours if abs(signed_area(c)) >= min_area]


# --------------------------------------------------------------- tightening


def deadspace(hull: ConvexPolygon, pixels: np.ndarray) -> float:
    """Fraction of the hull not covered by component pixels:
    1 - (pixels inside hull) / hull area. Slightly negative values occur for
    solid shapes because pixel-center rings under-measure raster area."""
    area = hull.area()
    if area <= 0:
        return 0.0
    inside = int(hull.contains_many(np.asarray(pixels, dtype=np.float64)).sum())
    return 1.0 - inside / area


def _pixels_hull(pixels: np.ndarray) -> ConvexPolygon:
    """Hull of pixel centers; degenerate sets fall back to the hull of the
    pixels' unit-square corners so thin slivers still produce a polygon."""
    try:
        return convex_hull(pixels)
    except DegenerateGeometryError:
        corners = []
        for x, y in np.asarray(pixels):
            corners += [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
        return convex_hull(corners)


def tighten(hull: ConvexPolygon, pixels, prm: PostprocessParams | None = None,
            depth: int = 0) -> list[ConvexPolygon]:
    """Recursively split a loose hull into tighter per-quadrant hulls.

    If the hull's dead-space is within tau (or the depth cap is reached) the
    hull stands. Otherwise the component's pixels are partitioned by the
    vertical and horizontal lines through their centroid, each nonempty
    quadrant is hulled, and tightening recurses. Quadrants are emitted
    top-left, top-right, bottom-left, bottom-right.
    """
    prm = prm or PostprocessParams()
    pts = np.asarray(pixels, dtype=np.float64)
    if depth >= prm.max_split_depth or deadspace(hull, pts) <= prm.deadspace_tau:
        return [hull]
    cx, cy = pts[:, 0].mean(), pts[:, 1].mean()
    quads = [
        pts[(pts[:, 1] < cy) & (pts[:, 0] < cx)],
        pts[(pts[:, 1] < cy) & (pts[:, 0] >= cx)],
        pts[(pts[:, 1] >= cy) & (pts[:, 0] < cx)],
        pts[(pts[:, 1] >= cy) & (pts[:, 0] >= cx)],
    ]
    nonempty = [q for q in quads if len(q)]
    if len(nonempty) <= 1:
        return [hull]
    out: list[ConvexPolygon] = []
    for q in nonempty:
        out.extend(tighten(_pixels_hull(q), q, prm, depth + 1))
    return out


# ----------------------------------------------------------- simplification


def _point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / L2
    t = min(max(t, 0.0), 1.0)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _rdp(chain: list, eps: float) -> list:
    if len(chain) < 3:
        return list(chain)
    a, b = chain[0], chain[-1]
    dmax, imax = -1.0, 0
    for i in range(1, len(chain) - 1):
        d = _point_segment_distance(chain[i], a, b)
        if d > dmax:
            dmax, imax = d, i
    if dmax > eps:
        left = _rdp(chain[: imax + 1], eps)
        right = _rdp(chain[imax:], eps)
        return left[:-1] + right
    return [a, b]


def simplify(poly: ConvexPolygon, epsilon: float) -> ConvexPolygon:
    """Ramer-Douglas-Peucker on a closed convex ring.

    The ring is split at its two mutually farthest vertices, each open chain
    is simplified at the given tolerance, the chains are re-joined, and a
    final hull pass guarantees convexity. Output vertices are a subset of the
    input's; every input vertex stays within epsilon of the output boundary.
    Triangles pass through unchanged.
    """
    v = list(poly.vertices)
    n = len(v)
    if n == 3:
        return poly
    besti, bestj, best = 0, 1, -1.0
    for i in range(n):
        for j in range(i + 1, n):
            d = (v[i][0] - v[j][0]) ** 2 + (v[i][1] - v[j][1]) ** 2
            if d > best:
                best, besti, bestj = d, i, j
    chain1 = v[besti:bestj + 1]
    chain2 = v[bestj:] + v[: besti + 1]
    joined = _rdp(chain1, epsilon)[:-1] + _rdp(chain2, epsilon)[:-1]
    try:
        return convex_hull(joined)
    except DegenerateGeometryError:
        return poly


def rasterize_polygon(poly: ConvexPolygon, shape: tuple[int, int],
                      tol: float = 1e-9) -> np.ndarray:
    """Boolean mask of pixels whose centers lie inside or on the polygon."""
    h, w = shape
    out = np.zeros((h, w), dtype=bool)
    xs = [v[0] for v in poly.vertices]
    ys = [v[1] for v in poly.vertices]
    x0, x1 = max(int(math.floor(min(xs))), 0), min(int(math.ceil(max(xs))) + 1, w)
    y0, y1 = max(int(math.floor(min(ys))), 0), min(int(math.ceil(max(ys))) + 1, h)
    if x0 >= x1 or y0 >= y1:
        return out
    gy, gx = np.mgrid[y0:y1, x0:x1]
    pts = np.column_stack((gx.ravel(), gy.ravel())).astype(np.float64)
    out[y0:y1, x0:x1] = poly.contains_many(pts, tol).reshape(y1 - y0, x1 - x0)
    return out


# ------------------------------------------------------------- full chain


def extract_subspaces(mask: np.ndarray, prm: PostprocessParams | None = None
                      ) -> list[ConvexPolygon]:
    """Run the whole mask-to-polygons chain; deterministic output order
    (component first-pixel order, then quadrant split order). Degenerate
    sub-pixel fragments are skipped with a log entry, never fatally."""
    prm = prm or PostprocessParams()
    return extract_from_refined(crf_refine(mask, prm), prm)


def extract_from_refined(refined: np.ndarray, prm: PostprocessParams | None = None
                         ) -> list[ConvexPolygon]:
    """The chain after CRF smoothing, for callers that keep the refined mask
    around (e.g. to persist it as a debug artifact)."""
    prm = prm or PostprocessParams()
    labels, n = connected_components(refined)
    polys: list[ConvexPolygon] = []
    slices = ndimage.find_objects(labels)
    for lab in range(1, n + 1):
        sl = slices[lab - 1]
        comp = labels[sl] == lab
        oy, ox = sl[0].start, sl[1].start
        ring = [(x + ox, y + oy) for x, y in trace_contour(comp)]
        if abs(signed_area(ring)) < prm.min_area:
            continue
        try:
            hull = convex_hull(ring)
        except DegenerateGeometryError:
            logger.info("skipping degenerate component %d", lab)
            continue
        ys, xs = np.nonzero(comp)
        pix = np.column_stack((xs + ox, ys + oy)).astype(np.float64)
        for piece in tighten(hull, pix, prm):
            polys.append(simplify(piece, prm.rdp_epsilon))
    return polys
