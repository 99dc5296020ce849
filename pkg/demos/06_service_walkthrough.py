"""
HTTP service walkthrough
========================

The whole site lifecycle over REST: create (fetch + stitch), upload prompts,
extract subspaces, QC edits (create bounds, fragment, merge), and the final
export. Runs an in-process service against a file:// tile provider and the
flood-fill backend; the same flow is what the browser UI and the
`smartscan run` CLI drive.
"""

import tempfile
import threading
import time
from pathlib import Path

import numpy as np
import requests
import uvicorn
from scipy import ndimage

from smartscan import geo
from smartscan.app import create_app
from smartscan.config import ServiceConfig
from smartscan.segbackend import BackendDescriptor
from _synthetic import blob_scene, make_tile_dir

work = Path(tempfile.mkdtemp(prefix="smartscan-svc-"))
LAT, LON, ZOOM = 29.7604, -95.3698, 19

# a 3072x3072 scene served as tiles
frame = geo.make_site_frame(geo.GeoPoint(LAT, LON), geo.ZoomSpec(ZOOM))
scene = np.zeros((3072, 3072, 3), dtype=np.uint8)
small, blobs = blob_scene(size=1024)
scene[:, :] = (120, 130, 125)
scene[1024:2048, 1024:2048] = small
template = make_tile_dir(work / "tiles", frame, scene)

config = ServiceConfig(
    data_root=work / "sites",
    tile_template=template,
    backend=BackendDescriptor("mock_floodfill", color_tolerance=10.0),
)
server = uvicorn.Server(uvicorn.Config(create_app(config), host="127.0.0.1",
                                       port=8765, log_level="error"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.05)
base = "http://127.0.0.1:8765"

r = requests.post(f"{base}/sites", json={"name": "Walkthrough", "lat": LAT, "lon": LON,
                                         "zoom": ZOOM})
site = r.json()["site"]
print(f"created {site['id']}: state={site['state']}")

# prompts for the blobs (offset by the 1024 px paste origin)
boxes, points = [], []
for mask in blobs:
    ys, xs = np.nonzero(mask)
    for row in range((ys.min() + 1024) // 256, (ys.max() + 1024) // 256 + 1):
        for col in range((xs.min() + 1024) // 256, (xs.max() + 1024) // 256 + 1):
            cell = scene[row * 256:(row + 1) * 256, col * 256:(col + 1) * 256]
            hit = np.zeros(cell.shape[:2], dtype=bool)
            sub = mask[max(row * 256 - 1024, 0):row * 256 - 1024 + 256,
                       max(col * 256 - 1024, 0):col * 256 - 1024 + 256]
            hit[:sub.shape[0], :sub.shape[1]] = sub
            if hit.sum() < 50:
                continue
            dist = ndimage.distance_transform_edt(hit)
            cy, cx = np.unravel_index(int(np.argmax(dist)), hit.shape)
            boxes.append({"row": row, "col": col})
            points.append({"row": row, "col": col,
                           "x": col * 256 + int(cx), "y": row * 256 + int(cy)})
r = requests.put(f"{base}/sites/{site['id']}/prompts",
                 json={"provenance": "manual", "boxes": boxes, "points": points})
print(f"prompts: {r.status_code}, violations={r.json()['violations']}")

r = requests.post(f"{base}/sites/{site['id']}/extract")
elements = r.json()["elements"]
print(f"extracted {len(elements)} subspaces; console says:")
for line in r.json()["job"]["message"]:
    print(f"  {line}")

# QC: add bounds, fragment the first subspace, merge it back
requests.post(f"{base}/sites/{site['id']}/elements", json={
    "type": "site_bounds", "vertices": [[0, 0], [3072, 0], [3072, 3072], [0, 3072]],
})
eid = elements[0]["id"]
pieces = requests.post(f"{base}/sites/{site['id']}/elements/{eid}/fragment").json()["elements"]
print(f"fragmented {eid} into {[p['id'] for p in pieces]}")
merged = requests.post(f"{base}/sites/{site['id']}/elements/merge",
                       json={"ids": [p["id"] for p in pieces]}).json()["element"]
print(f"merged back into {merged['id']}")

r = requests.post(f"{base}/sites/{site['id']}/export")
print("exported files:")
for name, digest in sorted(r.json()["files"].items()):
    print(f"  {name}  sha256={digest[:16]}...")
final_state = requests.get(f"{base}/sites/{site['id']}").json()["site"]["state"]
print(f"state: {final_state}")
print(f"site folder: {work / 'sites' / site['id']}")
server.should_exit = True
