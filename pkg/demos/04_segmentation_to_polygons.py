"""
Segmentation to convex subspace polygons
========================================

Per-grid segmentation with the deterministic flood-fill backend, OR-assembly
into one site mask, then the post-processing chain: mean-field smoothing,
components, contours, hulls, dead-space tightening and RDP simplification.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import ndimage

from smartscan.postprocess import PostprocessParams, extract_subspaces
from smartscan.prompts import BoxPrompt, GridIndex, PointPrompt, PromptSet
from smartscan.segbackend import BackendDescriptor, segment_site
from _synthetic import blob_scene

pixels, blobs = blob_scene(size=1024)

# prompt every cell a blob touches, with a point at the most interior pixel
boxes, points = [], []
for mask in blobs:
    ys, xs = np.nonzero(mask)
    for row in range(ys.min() // 256, ys.max() // 256 + 1):
        for col in range(xs.min() // 256, xs.max() // 256 + 1):
            cell = mask[row * 256:(row + 1) * 256, col * 256:(col + 1) * 256]
            if cell.sum() < 50:
                continue
            dist = ndimage.distance_transform_edt(cell)
            cy, cx = np.unravel_index(int(np.argmax(dist)), cell.shape)
            boxes.append(BoxPrompt(GridIndex(row, col)))
            points.append(PointPrompt(GridIndex(row, col), col * 256 + int(cx), row * 256 + int(cy)))
ps = PromptSet("demo", boxes, points)
print(f"{len(boxes)} box prompts, {len(points)} point prompts")

backend = BackendDescriptor("mock_floodfill", color_tolerance=10.0, parallelism=8)
mask = segment_site(pixels, ps, backend)
print(f"assembled mask covers {mask.sum()} px "
      f"(ground truth {sum(b.sum() for b in blobs)} px)")

polys = extract_subspaces(mask, PostprocessParams())
print(f"{len(polys)} convex subspace polygons:")
for i, poly in enumerate(polys):
    print(f"  polygon {i}: {len(poly)} vertices, area {poly.area():.0f} px^2")

fig, axes = plt.subplots(1, 2, figsize=(11, 5.5))
axes[0].imshow(pixels)
axes[0].set_title("synthetic site + prompts")
axes[0].scatter([p.x for p in points], [p.y for p in points], c="white", s=12)
axes[1].imshow(mask, cmap="gray")
for poly in polys:
    ring = list(poly.vertices) + [poly.vertices[0]]
    axes[1].plot([v[0] for v in ring], [v[1] for v in ring], lw=2)
axes[1].set_title("mask and extracted subspaces")
fig.savefig("subspaces.png", dpi=120, bbox_inches="tight")
print("figure written to subspaces.png")
