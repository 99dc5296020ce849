"""Shared synthetic inputs for the demo scripts: a fake tile provider on
disk (file:// template) and a small blob scene for segmentation demos."""

from pathlib import Path

import numpy as np
from PIL import Image

from smartscan import geo


def make_tile_dir(root: Path, frame: geo.SiteFrame, scene: np.ndarray | None = None) -> str:
    """Write the 6x6 block of tiles covering `frame` under root/{z}/{x}/{y}.png.
    Tiles show a latitude/longitude-ish gradient unless a scene is given.
    Returns the file:// URL template."""
    z = frame.zoom.zoom
    tx0 = int(frame.origin_world.x) // 512
    ty0 = int(frame.origin_world.y) // 512
    for r in range(6):
        for c in range(6):
            if scene is not None:
                pixels = scene[r * 512:(r + 1) * 512, c * 512:(c + 1) * 512]
            else:
                u = np.arange(512)
                pixels = np.zeros((512, 512, 3), dtype=np.uint8)
                pixels[:, :, 0] = (tx0 + c) % 256
                pixels[:, :, 1] = (ty0 + r) % 256
                pixels[:, :, 2] = (u[None, :] + u[:, None]) % 256
            path = root / str(z) / str(tx0 + c) / f"{ty0 + r}.png"
            path.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(pixels, mode="RGB").save(path)
    return f"file://{root}/{{z}}/{{x}}/{{y}}.png"


def blob_scene(size=1024, seed=3):
    """Textured background with three uniform colored blobs; returns
    (pixels, ground-truth masks)."""
    rng = np.random.default_rng(seed)
    pixels = rng.integers(90, 160, size=(size, size, 3), dtype=np.uint8)
    yy, xx = np.mgrid[0:size, 0:size]
    blobs = [
        (xx > 100) & (xx < 380) & (yy > 120) & (yy < 330),
        ((xx - 700) / 180.0) ** 2 + ((yy - 260) / 120.0) ** 2 <= 1.0,
        (np.abs(xx - 420) + np.abs(yy - 700)) <= 190,
    ]
    for mask, color in zip(blobs, [(230, 40, 40), (40, 220, 40), (40, 60, 230)]):
        pixels[mask] = color
    return pixels, blobs
