"""
Tile fetching and stitching
===========================

Plan the 6x6 tile block for a site, fetch the 36 tiles through the cache,
and stitch them into the 3072x3072 site image. A file:// tile provider
written on the fly stands in for the web map service.
"""

import tempfile
from pathlib import Path

from smartscan import geo, imagery
from _synthetic import make_tile_dir

work = Path(tempfile.mkdtemp(prefix="smartscan-demo-"))
frame = geo.make_site_frame(geo.GeoPoint(29.7604, -95.3698), geo.ZoomSpec(19))

# 36 keys, row-major over the 6x6 block
keys = imagery.plan_tiles(frame)
print(f"planned {len(keys)} tiles, "
      f"tx {min(k.tx for k in keys)}..{max(k.tx for k in keys)}, "
      f"ty {min(k.ty for k in keys)}..{max(k.ty for k in keys)}")

template = make_tile_dir(work / "provider", frame)
cfg = imagery.TileSourceConfig(url_template=template, cache_dir=work / "cache")

# first pass downloads, second pass is pure cache
img = imagery.extract_site_image(frame, cfg)
print(f"stitched image: {img.pixels.shape}, dtype {img.pixels.dtype}")
img = imagery.extract_site_image(frame, cfg)
cached = sorted((work / "cache").rglob("*.png"))
print(f"cache now holds {len(cached)} tiles under {work / 'cache'}")

out = work / "image.png"
imagery.save_site_image(img, out)
print(f"site image written to {out}")
