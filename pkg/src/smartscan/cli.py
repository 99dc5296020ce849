"""Command line entry points.

``smartscan run`` executes the headless pipeline (create site -> prompts ->
extract -> export) against an in-process store; ``smartscan serve`` hosts
the HTTP service. Exit codes: 0 success, 2 usage errors (bad zoom, missing
files), 1 runtime failures.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from smartscan import prompts as prmod
from smartscan.config import ServiceConfig, load_config
from smartscan.errors import SmartScanError, ZoomRangeError
from smartscan.geo import SITE_ZOOM_RANGE
from smartscan.segbackend import BackendDescriptor
from smartscan.store import SiteStore


@click.group()
def main():
    """Satellite site imagery to convex subspace polygons."""


@main.command()
@click.option("--name", default="site", show_default=True, help="Site name (slugged for the folder).")
@click.option("--lat", type=float, required=True)
@click.option("--lon", type=float, required=True)
@click.option("--zoom", type=int, required=True)
@click.option("--prompts", "prompts_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="PromptSet JSON file.")
@click.option("--backend", type=click.Choice(["mock", "remote"]), default="mock",
              show_default=True)
@click.option("--endpoint", default=None, help="Remote backend endpoint URL.")
@click.option("--tolerance", type=float, default=10.0, show_default=True,
              help="Mock backend color tolerance.")
@click.option("--tiles", "tile_template", required=True,
              help="Tile URL template with {z}/{x}/{y} placeholders (http or file scheme).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Data root; the site folder is created inside.")
def run(name, lat, lon, zoom, prompts_file, backend, endpoint, tolerance, tile_template, out_dir):
    """Create a site, apply prompts, extract subspaces and export JSON."""
    lo, hi = SITE_ZOOM_RANGE
    if not lo <= zoom <= hi:
        raise click.UsageError(str(ZoomRangeError(zoom)))
    if backend == "remote":
        if not endpoint:
            raise click.UsageError("--backend remote requires --endpoint")
        descriptor = BackendDescriptor("remote", endpoint=endpoint)
    else:
        descriptor = BackendDescriptor("mock_floodfill", color_tolerance=tolerance)
    try:
        ps = prmod.load_prompts(prompts_file)
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise click.UsageError(f"prompts file {prompts_file} is not a valid PromptSet: {exc}")

    config = ServiceConfig(data_root=Path(out_dir), tile_template=tile_template,
                           backend=descriptor)
    store = SiteStore(config)
    try:
        site, job = store.create_site(name, lat, lon, zoom)
        for line in job.message:
            click.echo(line)
        violations = store.put_prompts(site.id, ps)
        if violations:
            for v in violations:
                click.echo(f"prompt violation: {v}", err=True)
            sys.exit(2)
        elements, job = store.extract(site.id)
        for line in job.message:
            click.echo(line)
        if not any(e.type.value == "site_bounds" for e in store.list_elements(site.id)):
            # headless runs get the full image extent as bounds by default
            ext = site.frame.extent
            store.create_element(site.id, "site_bounds",
                                 [(0, 0), (ext, 0), (ext, ext), (0, ext)], label="full extent")
        manifest = store.export_site(site.id)
        click.echo(f"exported {len(manifest)} files to {store.folder(site.id) / 'exports'}")
        for fname, digest in sorted(manifest.items()):
            click.echo(f"  {fname}  sha256={digest[:12]}")
    except SmartScanError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file; SMARTSCAN_* env vars override.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
def serve(config_file, host, port):
    """Run the HTTP service."""
    import uvicorn

    from smartscan.app import create_app

    app = create_app(load_config(config_file))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
