"""Parity harness: runs the headless CLI pipeline into one data root, then
serves the HTTP API (with the same synthetic scene behind the tile fixture)
over a second data root for the browser-flow test to drive. Prints one JSON
line with the connection details, then serves until killed.

The CLI itself stops at export; the fragment step of the scripted flow is
applied through the store against the CLI's data root so both legs end with
identical element sets, which is what makes byte-identical exports a
meaningful check.
"""

import json
import socket
import sys
import tempfile
import threading
import time
from pathlib import Path

import uvicorn
from click.testing import CliRunner

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from scene import build_scene, prompts_for_blobs  # noqa: E402
from servers import TileServer  # noqa: E402

from smartscan import geo  # noqa: E402
from smartscan.app import create_app  # noqa: E402
from smartscan.cli import main as cli_main  # noqa: E402
from smartscan.config import ServiceConfig  # noqa: E402
from smartscan.prompts import save_prompts  # noqa: E402
from smartscan.segbackend import BackendDescriptor  # noqa: E402
from smartscan.store import SiteStore  # noqa: E402

LAT, LON, ZOOM = 41.9, 12.5, 19
NAME = "parity-site"


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="smartscan-parity-"))
    pixels, blobs = build_scene(seed=7)
    prompts_path = workdir / "prompts.json"
    save_prompts(prompts_for_blobs(blobs, NAME), prompts_path)

    tiles = TileServer().__enter__()
    frame = geo.make_site_frame(geo.GeoPoint(LAT, LON), geo.ZoomSpec(ZOOM))
    tiles.set_scene(pixels, int(frame.origin_world.x) // 512, int(frame.origin_world.y) // 512)

    # leg 1: CLI fixture run, then the scripted flow's fragment, re-exported
    cli_root = workdir / "cli-data"
    result = CliRunner().invoke(cli_main, [
        "run", "--name", NAME, "--lat", str(LAT), "--lon", str(LON),
        "--zoom", str(ZOOM), "--prompts", str(prompts_path),
        "--backend", "mock", "--tiles", tiles.template, "--out", str(cli_root),
    ])
    if result.exit_code != 0:
        print(json.dumps({"error": result.output}), flush=True)
        sys.exit(1)
    cli_store = SiteStore(ServiceConfig(
        data_root=cli_root, tile_template=tiles.template,
        backend=BackendDescriptor(color_tolerance=10.0),
    ))
    cli_store.fragment_element(NAME, "e1")
    cli_store.export_site(NAME)

    # leg 2: the HTTP service over a fresh root for the browser flow
    config = ServiceConfig(
        data_root=workdir / "ui-data",
        tile_template=tiles.template,
        backend=BackendDescriptor(color_tolerance=10.0),
    )
    app = create_app(config)
    port = free_port()
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    threading.Thread(target=server.run, daemon=True).start()
    deadline = time.time() + 30
    while not server.started:
        if time.time() > deadline:
            print(json.dumps({"error": "service did not start"}), flush=True)
            sys.exit(1)
        time.sleep(0.05)

    print(json.dumps({
        "port": port,
        "site": NAME,
        "lat": LAT,
        "lon": LON,
        "zoom": ZOOM,
        "prompts": str(prompts_path),
        "cli_exports": str(cli_root / NAME / "exports"),
    }), flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
