"""Facility constraint sets: typed site elements, half-space semantics for
linear constraints, feasibility queries, leak-point sampling, polygon editing
geometry, and the four-file JSON export consumed by the placement optimizer.

All element geometry lives in image pixel coordinates; exports carry a
site-local Cartesian dual per vertex (origin at the image center, x east,
y north, meters) so downstream consumers never need projection code.
Coordinates are canonicalized to 9 significant digits on construction, which
is what makes export -> import -> export byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from smartscan.errors import ConstraintValidationError, DegenerateGeometryError
from smartscan.geo import GeoPoint
from smartscan.postprocess import (
    CONVEXITY_EPS,
    ConvexPolygon,
    clean_ring,
    convex_hull,
    signed_area,
)

SCHEMA_VERSION = 1
EXPORT_FILES = ("site.json", "subspaces.json", "zones.json", "linear_constraints.json")


class ElementType(str, Enum):
    SITE_BOUNDS = "site_bounds"
    PERIMETER = "perimeter"
    SUBSPACE = "subspace"
    EXCLUSION_ZONE = "exclusion_zone"
    LINEAR_CONSTRAINT = "linear_constraint"


def _round_sig(x: float, digits: int = 9) -> float:
    return float(f"{float(x):.{digits}g}")


def _is_convex_ring(ring) -> bool:
    n = len(ring)
    if n < 3:
        return False
    for i in range(n):
        o, a, b = ring[i - 1], ring[i], ring[(i + 1) % n]
        cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        if cross < -CONVEXITY_EPS:
            return False
    return True


@dataclass(frozen=True)
class SiteElement:
    """One typed polygon of the constraint set. Vertices are normalized to
    positive orientation and 9 significant digits; non-convex rings are
    legal (the QC tool allows complex shapes) but carry ``convex=False`` and
    cannot be exported as subspaces."""

    id: str
    type: ElementType
    vertices: tuple[tuple[float, float], ...]
    label: str = ""
    provenance: str = "human"  # human | machine

    def __post_init__(self):
        verts = [(_round_sig(x), _round_sig(y)) for x, y in self.vertices]
        if len(verts) < 3:
            raise DegenerateGeometryError("element polygon needs >= 3 vertices")
        object.__setattr__(self, "type", ElementType(self.type))
        if self.type is ElementType.LINEAR_CONSTRAINT:
            if len(verts) != 3:
                raise DegenerateGeometryError("linear constraint must be a triangle")
            # vertex order is semantic here: the first two points are the cut
        elif signed_area(verts) < 0:
            verts = [verts[0]] + verts[1:][::-1]
        object.__setattr__(self, "vertices", tuple(verts))

    @property
    def convex(self) -> bool:
        return _is_convex_ring(self.vertices)

    def polygon(self) -> ConvexPolygon:
        return ConvexPolygon(self.vertices)

    def as_linear_constraint(self) -> "LinearConstraint":
        if self.type is not ElementType.LINEAR_CONSTRAINT:
            raise ValueError(f"element {self.id} is not a linear constraint")
        a, b, c = self.vertices
        return LinearConstraint(a, b, c)


@dataclass(frozen=True)
class LinearConstraint:
    """Triangle-encoded half-space: p1-p2 is the cut line, p3 marks the
    infeasible side."""

    p1: tuple[float, float]
    p2: tuple[float, float]
    p3: tuple[float, float]


def halfspace(lc: LinearConstraint) -> tuple[tuple[float, float], float, int]:
    """(unit normal n, offset d, sign s): a point q is infeasible iff
    sign(n . q - d) equals s. Points on the cut line are feasible."""
    (x1, y1), (x2, y2), (x3, y3) = lc.p1, lc.p2, lc.p3
    dx, dy = x2 - x1, y2 - y1
    length = math.hypot(dx, dy)
    if length < 1e-12:
        raise DegenerateGeometryError("cut line endpoints coincide")
    n = (-dy / length, dx / length)
    d = n[0] * x1 + n[1] * y1
    side = n[0] * x3 + n[1] * y3 - d
    if abs(side) < 1e-12:
        raise DegenerateGeometryError("witness point lies on the cut line")
    return n, d, 1 if side > 0 else -1


def infeasible_side(q: tuple[float, float], lc: LinearConstraint) -> bool:
    n, d, s = halfspace(lc)
    v = n[0] * q[0] + n[1] * q[1] - d
    return (1 if v > 0 else -1 if v < 0 else 0) == s


# ------------------------------------------------------- point containment


def _point_ring_position(q, ring, tol: float = 1e-9) -> str:
    """'on', 'inside' or 'outside' for an arbitrary simple ring."""
    x, y = q
    n = len(ring)
    for i in range(n):
        (x0, y0), (x1, y1) = ring[i], ring[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        L2 = ex * ex + ey * ey
        if L2 == 0:
            continue
        t = ((x - x0) * ex + (y - y0) * ey) / L2
        t = min(max(t, 0.0), 1.0)
        if math.hypot(x - (x0 + t * ex), y - (y0 + t * ey)) <= tol:
            return "on"
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = ring[i]
        xj, yj = ring[j]
        if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return "inside" if inside else "outside"


# ------------------------------------------------------------ constraint set


@dataclass
class ConstraintSet:
    name: str
    center: GeoPoint
    zoom: int
    meters_per_pixel: float
    elements: list[SiteElement] = field(default_factory=list)
    extent: int = 3072

    def __post_init__(self):
        self.meters_per_pixel = _round_sig(self.meters_per_pixel)

    def of_type(self, t: ElementType) -> list[SiteElement]:
        return [e for e in self.elements if e.type is t]

    def pixel_to_cartesian(self, px: float, py: float) -> tuple[float, float]:
        half = self.extent / 2.0
        return (
            _round_sig((px - half) * self.meters_per_pixel),
            _round_sig((half - py) * self.meters_per_pixel),
        )


def validate_constraint_set(cs: ConstraintSet) -> list[str]:
    """Violations of the set-level invariants; empty means exportable."""
    out = []
    bounds = cs.of_type(ElementType.SITE_BOUNDS)
    if len(bounds) != 1:
        out.append(f"expected exactly one site_bounds element, found {len(bounds)}")
    if len(cs.of_type(ElementType.PERIMETER)) > 1:
        out.append("more than one perimeter element")
    ids = [e.id for e in cs.elements]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(f"duplicate element id {dup!r}")
    for e in cs.of_type(ElementType.SUBSPACE):
        if not e.convex:
            out.append(f"subspace {e.id} is not convex")
    for e in cs.of_type(ElementType.LINEAR_CONSTRAINT):
        try:
            halfspace(e.as_linear_constraint())
        except DegenerateGeometryError as exc:
            out.append(f"linear constraint {e.id}: {exc}")
    return out


def is_feasible(q: tuple[float, float], cs: ConstraintSet) -> bool:
    """True iff q is inside the site bounds (boundary counts), outside every
    exclusion zone (boundary counts as outside), and on the feasible side of
    (or on) every linear constraint's cut line."""
    bounds = cs.of_type(ElementType.SITE_BOUNDS)
    if len(bounds) != 1:
        raise ConstraintValidationError(validate_constraint_set(cs))
    if _point_ring_position(q, bounds[0].vertices) == "outside":
        return False
    for zone in cs.of_type(ElementType.EXCLUSION_ZONE):
        if _point_ring_position(q, zone.vertices) == "inside":
            return False
    for lin in cs.of_type(ElementType.LINEAR_CONSTRAINT):
        if infeasible_side(q, lin.as_linear_constraint()):
            return False
    return True


# ------------------------------------------------------------------ sampling


def sample_in_polygon(poly: ConvexPolygon, n: int, seed: int = 0) -> np.ndarray:
    """n i.i.d. uniform points in the polygon; deterministic per seed.

    Fan-triangulates from vertex 0, picks triangles with probability
    proportional to area, and samples each by the reflected barycentric
    method. Returns an (n, 2) array.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    v = np.asarray(poly.vertices, dtype=np.float64)
    if n == 0:
        return np.empty((0, 2))
    a = v[0]
    bs = v[1:-1]
    cs = v[2:]
    areas = 0.5 * np.abs(
        (bs[:, 0] - a[0]) * (cs[:, 1] - a[1]) - (bs[:, 1] - a[1]) * (cs[:, 0] - a[0])
    )
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=n, p=areas / areas.sum())
    u = rng.random(n)
    w = rng.random(n)
    flip = u + w > 1.0
    u[flip] = 1.0 - u[flip]
    w[flip] = 1.0 - w[flip]
    return a + u[:, None] * (bs[tri] - a) + w[:, None] * (cs[tri] - a)


# ----------------------------------------------------------- editing geometry


def _clip_half(ring, value_fn):
    """Sutherland-Hodgman clip of a convex ring against value_fn(p) >= 0."""
    out = []
    n = len(ring)
    for i in range(n):
        cur, nxt = ring[i], ring[(i + 1) % n]
        fc, fn = value_fn(cur), value_fn(nxt)
        if fc >= 0:
            out.append(cur)
        if (fc > 0 and fn < 0) or (fc < 0 and fn > 0):
            t = fc / (fc - fn)
            out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
    return out


def fragment(poly: ConvexPolygon) -> list[ConvexPolygon]:
    """Split a convex polygon into at most 4 convex pieces by the vertical
    and horizontal lines through its centroid. Pieces are interior-disjoint,
    their union is the original, and total area is conserved; empty pieces
    are dropped, so a polygon lying in one quadrant comes back whole."""
    cx, cy = poly.centroid()
    quadrants = [
        (lambda p: cx - p[0], lambda p: cy - p[1]),  # x <= cx, y <= cy
        (lambda p: p[0] - cx, lambda p: cy - p[1]),  # x >= cx, y <= cy
        (lambda p: cx - p[0], lambda p: p[1] - cy),  # x <= cx, y >= cy
        (lambda p: p[0] - cx, lambda p: p[1] - cy),  # x >= cx, y >= cy
    ]
    pieces = []
    for fx, fy in quadrants:
        ring = _clip_half(list(poly.vertices), fx)
        if len(ring) >= 3:
            ring = _clip_half(ring, fy)
        ring = clean_ring(ring)
        if len(ring) >= 3 and signed_area(ring) > 1e-9:
            pieces.append(ConvexPolygon(ring))
    return pieces or [poly]  # fully degenerate split keeps the original


def merge(polys: list[ConvexPolygon]) -> ConvexPolygon:
    """Convex hull of all vertices; contains every input polygon."""
    if not polys:
        raise ValueError("merge needs at least one polygon")
    points = [v for p in polys for v in p.vertices]
    return convex_hull(points)


@dataclass(frozen=True)
class EditResult:
    vertices: tuple[tuple[float, float], ...]
    convex: bool


def edit_vertex(ring, op: str, index: int, point: tuple[float, float] | None = None
                ) -> EditResult:
    """Apply a vertex edit (move / insert / delete) to a polygon ring.

    Non-convex results are accepted and flagged; deleting below a triangle
    raises. ``insert`` places the new vertex after ``index``.
    """
    verts = [(float(x), float(y)) for x, y in ring]
    if not 0 <= index < len(verts):
        raise IndexError(f"vertex index {index} out of range")
    if op == "move":
        if point is None:
            raise ValueError("move needs a target point")
        verts[index] = (float(point[0]), float(point[1]))
    elif op == "insert":
        if point is None:
            raise ValueError("insert needs a point")
        verts.insert(index + 1, (float(point[0]), float(point[1])))
    elif op == "delete":
        if len(verts) <= 3:
            raise DegenerateGeometryError("cannot delete a vertex of a triangle")
        del verts[index]
    else:
        raise ValueError(f"unknown edit op {op!r}")
    if abs(signed_area(verts)) < 1e-12:
        raise DegenerateGeometryError("edit collapsed the polygon to zero area")
    if signed_area(verts) < 0:
        verts = [verts[0]] + verts[1:][::-1]
    return EditResult(tuple(verts), _is_convex_ring(verts))


# ----------------------------------------------------------------- JSON files


def _element_doc(cs: ConstraintSet, e: SiteElement) -> dict:
    return {
        "id": e.id,
        "label": e.label,
        "provenance": e.provenance,
        "pixel": [[x, y] for x, y in e.vertices],
        "cartesian": [list(cs.pixel_to_cartesian(x, y)) for x, y in e.vertices],
    }


def _dump(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def export(cs: ConstraintSet, directory: str | Path) -> dict[str, str]:
    """Write site.json, subspaces.json, zones.json and linear_constraints.json.

    Keys are sorted and numbers carry at most 9 significant digits, so
    re-exporting an unchanged set is byte-identical. Returns
    {filename: sha256 hex digest}. Raises
    :class:`ConstraintValidationError` when the set is invalid.
    """
    import hashlib

    violations = validate_constraint_set(cs)
    if violations:
        raise ConstraintValidationError(violations)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    bounds = cs.of_type(ElementType.SITE_BOUNDS)[0]
    perimeter = cs.of_type(ElementType.PERIMETER)
    site_doc = {
        "schema_version": SCHEMA_VERSION,
        "site": {
            "name": cs.name,
            "center": {"lat": _round_sig(cs.center.lat), "lon": _round_sig(cs.center.lon)},
            "zoom": cs.zoom,
            "meters_per_pixel": cs.meters_per_pixel,
            "image_size": cs.extent,
            "crs": {
                "origin": "image_center",
                "x_axis": "east",
                "y_axis": "north",
                "units": "meters",
            },
        },
        "bounds": _element_doc(cs, bounds),
        "perimeter": _element_doc(cs, perimeter[0]) if perimeter else None,
    }
    subspaces_doc = {
        "schema_version": SCHEMA_VERSION,
        "subspaces": [_element_doc(cs, e) for e in cs.of_type(ElementType.SUBSPACE)],
    }
    zones_doc = {
        "schema_version": SCHEMA_VERSION,
        "zones": [_element_doc(cs, e) for e in cs.of_type(ElementType.EXCLUSION_ZONE)],
    }
    lin_docs = []
    for e in cs.of_type(ElementType.LINEAR_CONSTRAINT):
        cart = [cs.pixel_to_cartesian(x, y) for x, y in e.vertices]
        n, d, s = halfspace(LinearConstraint(*cart))
        doc = _element_doc(cs, e)
        doc["halfspace"] = {
            "normal": [_round_sig(n[0]), _round_sig(n[1])],
            "offset": _round_sig(d),
            "infeasible_sign": s,
        }
        lin_docs.append(doc)
    lin_doc = {"schema_version": SCHEMA_VERSION, "linear_constraints": lin_docs}

    docs = dict(zip(EXPORT_FILES, (site_doc, subspaces_doc, zones_doc, lin_doc)))
    manifest = {}
    for name, doc in docs.items():
        path = directory / name
        _dump(doc, path)
        manifest[name] = hashlib.sha256(path.read_bytes()).hexdigest()
    return manifest


def _element_from_doc(doc: dict, etype: ElementType) -> SiteElement:
    return SiteElement(
        id=doc["id"],
        type=etype,
        vertices=tuple((float(x), float(y)) for x, y in doc["pixel"]),
        label=doc.get("label", ""),
        provenance=doc.get("provenance", "human"),
    )


def import_(directory: str | Path) -> ConstraintSet:
    """Inverse of :func:`export`."""
    directory = Path(directory)
    site_doc = json.loads((directory / "site.json").read_text())
    meta = site_doc["site"]
    elements = [_element_from_doc(site_doc["bounds"], ElementType.SITE_BOUNDS)]
    if site_doc.get("perimeter"):
        elements.append(_element_from_doc(site_doc["perimeter"], ElementType.PERIMETER))
    sub_doc = json.loads((directory / "subspaces.json").read_text())
    elements += [_element_from_doc(d, ElementType.SUBSPACE) for d in sub_doc["subspaces"]]
    zones_doc = json.loads((directory / "zones.json").read_text())
    elements += [_element_from_doc(d, ElementType.EXCLUSION_ZONE) for d in zones_doc["zones"]]
    lin_doc = json.loads((directory / "linear_constraints.json").read_text())
    elements += [
        _element_from_doc(d, ElementType.LINEAR_CONSTRAINT)
        for d in lin_doc["linear_constraints"]
    ]
    return ConstraintSet(
        name=meta["name"],
        center=GeoPoint(meta["center"]["lat"], meta["center"]["lon"]),
        zoom=int(meta["zoom"]),
        meters_per_pixel=float(meta["meters_per_pixel"]),
        elements=elements,
        extent=int(meta.get("image_size", 3072)),
    )
