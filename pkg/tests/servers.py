"""Local HTTP fixtures: a coordinate-encoded tile server and a segmentation
echo server speaking the remote backend wire protocol."""

import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image


def tile_pixels(tx, ty):
    """Deterministic 512x512x3 tile encoding its own indices and per-pixel
    position: R=tx%256, G=ty%256, B=(u+2v)%256."""
    u = np.arange(512)
    v = np.arange(512)
    b = (u[None, :] + 2 * v[:, None]) % 256
    out = np.empty((512, 512, 3), dtype=np.uint8)
    out[:, :, 0] = tx % 256
    out[:, :, 1] = ty % 256
    out[:, :, 2] = b
    return out


def expected_site_pixel(origin_x, origin_y, x, y):
    """Placement oracle: the color the stitched image must carry at (x, y)."""
    wx, wy = origin_x + x, origin_y + y
    tx, ty = wx // 512, wy // 512
    u, v = wx % 512, wy % 512
    return (tx % 256, ty % 256, (u + 2 * v) % 256)


def _png_bytes(pixels):
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG", compress_level=1)
    return buf.getvalue()


def _scene_crop(server, tx, ty):
    pixels, tx0, ty0 = server.scene
    c, r = tx - tx0, ty - ty0
    if 0 <= c < 6 and 0 <= r < 6:
        return pixels[r * 512:(r + 1) * 512, c * 512:(c + 1) * 512]
    return None


class _TileHandler(BaseHTTPRequestHandler):
    def do_GET(self):
        server = self.server
        server.request_counts[self.path] = server.request_counts.get(self.path, 0) + 1
        parts = self.path.strip("/").removesuffix(".png").split("/")
        try:
            z, x, y = (int(p) for p in parts)
        except ValueError:
            self.send_error(400)
            return
        if (z, x, y) in server.fail_keys:
            self.send_error(404)
            return
        if (z, x, y) in server.malformed_keys:
            data = _png_bytes(np.zeros((64, 64, 3), dtype=np.uint8))
        elif server.scene is not None and _scene_crop(server, x, y) is not None:
            data = server.png_cache.setdefault((x, y), _png_bytes(_scene_crop(server, x, y)))
        else:
            data = server.png_cache.setdefault((x, y), _png_bytes(tile_pixels(x, y)))
        self.send_response(200)
        self.send_header("Content-Type", "image/png")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class TileServer:
    """Context manager running the tile fixture on an ephemeral port."""

    def __enter__(self):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _TileHandler)
        self.httpd.request_counts = {}
        self.httpd.fail_keys = set()
        self.httpd.malformed_keys = set()
        self.httpd.png_cache = {}
        self.httpd.scene = None
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()

    @property
    def template(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/{{z}}/{{x}}/{{y}}.png"

    @property
    def request_counts(self):
        return self.httpd.request_counts

    def fail(self, z, x, y):
        self.httpd.fail_keys.add((z, x, y))

    def malform(self, z, x, y):
        self.httpd.malformed_keys.add((z, x, y))

    def set_scene(self, pixels, tx0, ty0):
        """Serve crops of a 3072x3072 scene for the 6x6 block at (tx0, ty0)."""
        self.httpd.scene = (pixels, tx0, ty0)
        self.httpd.png_cache = {}


class _AutoPromptHandler(BaseHTTPRequestHandler):
    """POST /auto_prompts fixture: replies with preconfigured heatmaps."""

    def do_POST(self):
        if self.path != "/auto_prompts":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        payload = json.dumps(self.server.reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


class AutoPromptFixtureServer:
    """Serves configured per-grid heatmaps over the sidecar wire contract."""

    def __init__(self, grid_points, sigma=8.0):
        """grid_points: {(row, col): [(x, y) cell-local generator points]}"""
        import base64

        from smartscan.prompts import render_heatmap

        heatmaps = []
        for (row, col), pts in sorted(grid_points.items()):
            h = render_heatmap(pts, sigma=sigma, extent=(256, 256))
            img = Image.fromarray(np.round(h.values * 255).astype(np.uint8), mode="L")
            buf = io.BytesIO()
            img.save(buf, format="PNG")
            heatmaps.append({
                "row": row,
                "col": col,
                "sigma": sigma,
                "heatmap_png_b64": base64.b64encode(buf.getvalue()).decode("ascii"),
            })
        self.reply = {
            "selected_grids": [{"row": r, "col": c} for r, c in sorted(grid_points)],
            "heatmaps": heatmaps,
        }

    def __enter__(self):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _AutoPromptHandler)
        self.httpd.reply = self.reply
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()

    @property
    def endpoint(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"


class _EchoHandler(BaseHTTPRequestHandler):
    """Implements POST /segment: mask = (red channel of crop >= 128)."""

    def do_POST(self):
        from smartscan.segbackend import mask_to_png_b64, png_b64_to_rgb

        if self.path != "/segment":
            self.send_error(404)
            return
        if self.server.fail_all:
            self.send_error(500, "backend exploded")
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        crop = png_b64_to_rgb(body["crop_png_b64"])
        mask = (crop[:, :, 0] >= 128).astype(np.uint8)
        payload = json.dumps({"mask_png_b64": mask_to_png_b64(mask)}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


class EchoSegmentServer:
    def __enter__(self):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _EchoHandler)
        self.httpd.fail_all = False
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()

    @property
    def endpoint(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def fail(self):
        self.httpd.fail_all = True
