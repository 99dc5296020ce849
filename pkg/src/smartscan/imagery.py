"""Plan, fetch and stitch the 6x6 block of 512 px map tiles into one
3072x3072 site image.

Tiles are cached one PNG per key under ``cache_dir/z/x/y.png`` with no TTL;
basemaps change slowly and reproducibility matters more. Fetches for
distinct keys run concurrently, and concurrent fetches of the same key are
collapsed into a single flight.
"""

from __future__ import annotations

import io
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests
from PIL import Image

from smartscan.errors import DimensionMismatchError, MalformedTileError, TileFetchError
from smartscan.geo import IMAGE_SIZE, TILE_SIZE, SiteFrame

GRID_TILES = IMAGE_SIZE // TILE_SIZE  # 6


@dataclass(frozen=True)
class TileKey:
    zoom: int
    tx: int
    ty: int

    def __post_init__(self):
        n = 1 << self.zoom
        if not (0 <= self.tx < n and 0 <= self.ty < n):
            raise ValueError(f"tile ({self.tx}, {self.ty}) outside zoom {self.zoom} range")


@dataclass
class TileImage:
    pixels: np.ndarray  # 512x512x3 uint8

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.uint8)
        if p.shape != (TILE_SIZE, TILE_SIZE, 3):
            raise MalformedTileError(f"tile must be {TILE_SIZE}x{TILE_SIZE}x3, got {p.shape}")
        self.pixels = p


@dataclass
class SiteImage:
    pixels: np.ndarray  # 3072x3072x3 uint8
    frame: SiteFrame

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.uint8)
        if p.shape != (IMAGE_SIZE, IMAGE_SIZE, 3):
            raise DimensionMismatchError(
                f"site image must be {IMAGE_SIZE}x{IMAGE_SIZE}x3, got {p.shape}"
            )
        self.pixels = p


@dataclass
class TileSourceConfig:
    url_template: str  # must contain {z}, {x} and {y}
    cache_dir: str | Path
    retry_count: int = 3
    timeout: float = 20.0
    parallelism: int = 8

    def __post_init__(self):
        for ph in ("{z}", "{x}", "{y}"):
            if ph not in self.url_template:
                raise ValueError(f"url_template missing {ph} placeholder")
        self.cache_dir = Path(self.cache_dir)


def plan_tiles(f: SiteFrame) -> list[TileKey]:
    """The 36 tile keys covering the frame, row-major (ty outer, tx inner).

    The frame origin is tile-aligned by construction; a misaligned frame is
    a contract violation.
    """
    ox, oy = f.origin_world.x, f.origin_world.y
    if ox % TILE_SIZE or oy % TILE_SIZE:
        raise ValueError("frame origin is not tile aligned")
    tx0, ty0 = int(ox) // TILE_SIZE, int(oy) // TILE_SIZE
    return [
        TileKey(f.zoom.zoom, tx0 + c, ty0 + r)
        for r in range(GRID_TILES)
        for c in range(GRID_TILES)
    ]


_inflight_lock = threading.Lock()
_inflight: dict[tuple, threading.Lock] = {}


def _tile_lock(key: TileKey) -> threading.Lock:
    with _inflight_lock:
        return _inflight.setdefault((key.zoom, key.tx, key.ty), threading.Lock())


def _decode_tile(data: bytes, key: TileKey) -> TileImage:
    try:
        img = Image.open(io.BytesIO(data)).convert("RGB")
    except Exception as exc:
        raise MalformedTileError(f"tile {key} did not decode: {exc}") from exc
    if img.size != (TILE_SIZE, TILE_SIZE):
        raise MalformedTileError(f"tile {key} decoded to {img.size}, expected 512x512")
    return TileImage(np.asarray(img))


def _download(url: str, cfg: TileSourceConfig, key: TileKey) -> bytes:
    if url.startswith("file://"):
        path = Path(url[len("file://"):])
        if not path.exists():
            raise TileFetchError(f"tile {key}: no file at {path}")
        return path.read_bytes()
    last: Exception | None = None
    for attempt in range(cfg.retry_count):
        try:
            resp = requests.get(url, timeout=cfg.timeout)
            if resp.status_code == 200:
                return resp.content
            last = TileFetchError(f"tile {key}: HTTP {resp.status_code} from {url}")
        except requests.RequestException as exc:
            last = TileFetchError(f"tile {key}: {exc}")
        if attempt + 1 < cfg.retry_count:
            time.sleep(0.05 * (attempt + 1))
    raise last


def fetch_tile(key: TileKey, cfg: TileSourceConfig) -> TileImage:
    """Return the tile, from cache when present, fetching otherwise.

    Raises :class:`TileFetchError` after retries are exhausted and
    :class:`MalformedTileError` when the payload is not a 512x512 image.
    """
    cache_path = Path(cfg.cache_dir) / str(key.zoom) / str(key.tx) / f"{key.ty}.png"
    with _tile_lock(key):
        if cache_path.exists():
            return _decode_tile(cache_path.read_bytes(), key)
        url = cfg.url_template.format(z=key.zoom, x=key.tx, y=key.ty)
        data = _download(url, cfg, key)
        tile = _decode_tile(data, key)  # validate before touching the cache
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        cache_path.write_bytes(data)
        return tile


def fetch_all(keys: list[TileKey], cfg: TileSourceConfig) -> list[TileImage]:
    """Fetch tiles with bounded parallelism, preserving key order."""
    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        return list(pool.map(lambda k: fetch_tile(k, cfg), keys))


def stitch(tiles: list[TileImage], f: SiteFrame) -> SiteImage:
    """Place 36 tiles in plan order into the 3072x3072 site image; tile i
    (row r, col c) fills pixel block [512r, 512r+512) x [512c, 512c+512)
    with no resampling."""
    if len(tiles) != GRID_TILES * GRID_TILES:
        raise DimensionMismatchError(f"expected 36 tiles, got {len(tiles)}")
    out = np.empty((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
    for i, tile in enumerate(tiles):
        r, c = divmod(i, GRID_TILES)
        out[r * TILE_SIZE:(r + 1) * TILE_SIZE, c * TILE_SIZE:(c + 1) * TILE_SIZE] = tile.pixels
    return SiteImage(out, f)


def extract_site_image(f: SiteFrame, cfg: TileSourceConfig) -> SiteImage:
    """Plan, fetch and stitch in one call."""
    return stitch(fetch_all(plan_tiles(f), cfg), f)


def save_site_image(img: SiteImage, path: str | Path) -> None:
    # low compression effort: these rasters are large and written once
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG", compress_level=1)


def load_site_image(path: str | Path, frame: SiteFrame) -> SiteImage:
    pixels = np.asarray(Image.open(path).convert("RGB"))
    return SiteImage(pixels, frame)


def crop_cell(img: SiteImage, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    return img.pixels[y0:y1, x0:x1]
