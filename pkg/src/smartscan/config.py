"""Service configuration: one JSON file plus SMARTSCAN_* environment
overrides for the tile source, segmentation backend, sidecar and data root."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from smartscan.segbackend import BackendDescriptor


@dataclass
class ServiceConfig:
    data_root: Path = Path("./sites")
    tile_template: str = "https://tile.example.com/{z}/{x}/{y}.png"
    backend: BackendDescriptor = field(default_factory=BackendDescriptor)
    sidecar_endpoint: str | None = None
    tile_parallelism: int = 8
    tile_retry_count: int = 3
    tile_timeout: float = 20.0

    def __post_init__(self):
        self.data_root = Path(self.data_root)


_ENV_PREFIX = "SMARTSCAN_"


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Build the config from an optional JSON file, then apply environment
    overrides (SMARTSCAN_DATA_ROOT, SMARTSCAN_TILE_TEMPLATE,
    SMARTSCAN_BACKEND_KIND, SMARTSCAN_BACKEND_ENDPOINT, SMARTSCAN_SIDECAR,
    SMARTSCAN_PARALLELISM)."""
    env = os.environ if env is None else env
    doc: dict = {}
    if path is not None:
        doc = json.loads(Path(path).read_text())
    backend_doc = dict(doc.get("backend", {}))
    if _ENV_PREFIX + "BACKEND_KIND" in env:
        backend_doc["kind"] = env[_ENV_PREFIX + "BACKEND_KIND"]
    if _ENV_PREFIX + "BACKEND_ENDPOINT" in env:
        backend_doc["endpoint"] = env[_ENV_PREFIX + "BACKEND_ENDPOINT"]
    if _ENV_PREFIX + "PARALLELISM" in env:
        backend_doc["parallelism"] = int(env[_ENV_PREFIX + "PARALLELISM"])
    backend = BackendDescriptor(**backend_doc) if backend_doc else BackendDescriptor()
    return ServiceConfig(
        data_root=Path(env.get(_ENV_PREFIX + "DATA_ROOT", doc.get("data_root", "./sites"))),
        tile_template=env.get(
            _ENV_PREFIX + "TILE_TEMPLATE",
            doc.get("tile_template", ServiceConfig.tile_template),
        ),
        backend=backend,
        sidecar_endpoint=env.get(_ENV_PREFIX + "SIDECAR", doc.get("sidecar_endpoint")),
        tile_parallelism=int(doc.get("tile_parallelism", 8)),
        tile_retry_count=int(doc.get("tile_retry_count", 3)),
        tile_timeout=float(doc.get("tile_timeout", 20.0)),
    )
