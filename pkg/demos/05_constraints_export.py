"""
Constraint sets and the JSON hand-off
=====================================

Typed site elements (bounds, perimeter, subspaces, exclusion zones,
triangle-encoded linear constraints), feasibility queries, uniform leak-point
sampling, fragment/merge editing, and the four-file export consumed by the
sensor-placement optimizer.
"""

import tempfile
from pathlib import Path

from smartscan import constraints as cx
from smartscan.geo import GeoPoint
from smartscan.postprocess import ConvexPolygon

elements = [
    cx.SiteElement("bounds", cx.ElementType.SITE_BOUNDS,
                   ((100, 100), (2970, 110), (2960, 2980), (110, 2960))),
    cx.SiteElement("pad-a", cx.ElementType.SUBSPACE,
                   ((600, 600), (1100, 620), (1080, 980), (620, 960)), label="well pad"),
    cx.SiteElement("tanks", cx.ElementType.EXCLUSION_ZONE,
                   ((1500, 1500), (1800, 1500), (1800, 1800), (1500, 1800))),
    # first two vertices cut, third marks the infeasible side
    cx.SiteElement("road", cx.ElementType.LINEAR_CONSTRAINT,
                   ((100, 2500), (2900, 2550), (1500, 2900))),
]
cs = cx.ConstraintSet("demo-facility", GeoPoint(31.9686, -99.9018), 19, 0.126843, elements)

# the half-space of the linear constraint, and what it rules out
n, d, s = cx.halfspace(elements[3].as_linear_constraint())
print(f"cut normal {n[0]:+.4f},{n[1]:+.4f}  offset {d:.1f}  infeasible sign {s:+d}")
for q in [(1500, 1400), (1500, 2800), (400, 400), (1600, 1600)]:
    print(f"  {q}: {'feasible' if cx.is_feasible(q, cs) else 'infeasible'}")

# uniform leak points inside a subspace, deterministic per seed
pad = ConvexPolygon(elements[1].vertices)
samples = cx.sample_in_polygon(pad, n=5, seed=42)
print("leak point samples:")
for x, y in samples:
    print(f"  ({x:.1f}, {y:.1f})")

# QC-style editing: fragment into quadrants, merge back
pieces = cx.fragment(pad)
print(f"fragmented into {len(pieces)} pieces, "
      f"areas {[round(p.area()) for p in pieces]} (total {pad.area():.0f})")
merged = cx.merge(pieces)
print(f"merged back: {len(merged)} vertices, area {merged.area():.0f}")

# the export: four JSON files with pixel + local-Cartesian duals
out = Path(tempfile.mkdtemp(prefix="smartscan-export-"))
manifest = cx.export(cs, out)
for name, digest in sorted(manifest.items()):
    print(f"{name}: sha256 {digest[:16]}...")
print((out / "linear_constraints.json").read_text())
