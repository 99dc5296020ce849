"""
Grid prompts, heatmaps and peak finding
=======================================

The prompting data model: CAPTCHA-style box prompts over the 12x12 grid,
point prompts inside each box, unit-height Gaussian heatmaps encoding point
distributions, and the peak finder that turns any predicted heatmap back
into point prompts.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from smartscan import prompts as pr

# boxes and points, validated against the grid invariants
g = pr.GridIndex(2, 3)
box = pr.BoxPrompt(g)
print(f"cell (2,3) rectangle: {box.rect}")

ps = pr.PromptSet("demo", [box], [pr.PointPrompt(g, 850, 600)])
print(f"violations for a good set : {pr.validate(ps)}")
bad = pr.PromptSet("demo", [box], [])
print(f"violations for box w/o pt : {pr.validate(bad)}")

# a heatmap is the max of unit Gaussians centered on the points
rng = np.random.default_rng(0)
generators = [(60, 60), (200, 90), (120, 210), (30, 220)]
heat = pr.render_heatmap(generators, sigma=8.0, extent=(256, 256))
print(f"heatmap range: [{heat.values.min():.3f}, {heat.values.max():.3f}]")

# the peak finder recovers the generators exactly
peaks = pr.find_peaks(heat, pr.PeakParams(threshold=0.5, min_separation=8.0))
print(f"generators: {sorted(generators)}")
print(f"peaks     : {sorted(peaks)}")

fig, ax = plt.subplots(figsize=(5, 5))
ax.imshow(heat.values, cmap="magma")
ax.scatter([p[0] for p in peaks], [p[1] for p in peaks],
           facecolors="none", edgecolors="cyan", s=120, label="recovered peaks")
ax.legend()
ax.set_title("point-prompt heatmap and recovered peaks")
fig.savefig("heatmap_peaks.png", dpi=120, bbox_inches="tight")
print("figure written to heatmap_peaks.png")

# the two comparison prompt schemes
boxes = [pr.BoxPrompt(pr.GridIndex(0, 0)), pr.BoxPrompt(pr.GridIndex(0, 1))]
centers = pr.baseline_center(boxes, "demo")
print(f"center-point baseline: {[(p.x, p.y) for p in centers.points]}")

image = np.zeros((3072, 3072, 3), dtype=np.uint8)
image[40:120, 30:180] = 220  # something with edges in cell (0, 0)
density = pr.baseline_density(image, boxes, "demo")
print(f"density baseline     : {[(p.x, p.y) for p in density.points]}")
