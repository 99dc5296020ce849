"""Coordinate transforms: WGS84 lat/lon <-> spherical Web-Mercator world
pixels <-> image-local pixels <-> site-local Cartesian meters.

World pixels follow the slippy-map convention: the world at zoom z is a
square of side ``512 * 2**z`` pixels, origin at the top-left (lat +85.05...,
lon -180), x growing east and y growing south. The site-local frame is
metric, origin at the image center, x pointing east and y pointing north.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from smartscan.errors import ProjectionRangeError, ZoomRangeError

TILE_SIZE = 512
EARTH_RADIUS_M = 6378137.0
MAX_LATITUDE = 85.05112878
IMAGE_SIZE = 3072
HALF_IMAGE = IMAGE_SIZE // 2
SITE_ZOOM_RANGE = (19, 21)


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 coordinate, latitude within the Mercator-projectable range,
    longitude normalized to [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self):
        if not -MAX_LATITUDE <= self.lat <= MAX_LATITUDE:
            raise ProjectionRangeError(
                f"latitude {self.lat} outside projectable range +-{MAX_LATITUDE}"
            )
        lon = ((self.lon + 180.0) % 360.0) - 180.0
        object.__setattr__(self, "lon", lon)


@dataclass(frozen=True)
class ZoomSpec:
    zoom: int
    tile_size: int = TILE_SIZE

    def __post_init__(self):
        if self.tile_size != TILE_SIZE:
            raise ValueError(f"tile_size fixed at {TILE_SIZE}")

    @property
    def world_size(self) -> float:
        """Side of the square world-pixel extent at this zoom."""
        return float(self.tile_size * (1 << self.zoom))


@dataclass(frozen=True)
class WorldPixel:
    """Continuous world-pixel coordinate at a zoom level. The closed upper
    bound admits the exact bottom/right world edge."""

    x: float
    y: float
    zoom: ZoomSpec

    def __post_init__(self):
        s = self.zoom.world_size
        if not (0.0 <= self.x <= s and 0.0 <= self.y <= s):
            raise ProjectionRangeError(
                f"world pixel ({self.x}, {self.y}) outside [0, {s}] at zoom {self.zoom.zoom}"
            )


@dataclass(frozen=True)
class LocalCartesian:
    """Meters relative to the site center, x east, y north."""

    x_east: float
    y_north: float


def latlon_to_world_pixel(g: GeoPoint, z: ZoomSpec) -> WorldPixel:
    """Project a GeoPoint to continuous world pixels (spherical Mercator)."""
    s = z.world_size
    phi = math.radians(g.lat)
    x = (g.lon + 180.0) / 360.0 * s
    y = (1.0 - math.log(math.tan(phi) + 1.0 / math.cos(phi)) / math.pi) / 2.0 * s
    # fp noise at the projection boundary can land a hair outside [0, s]
    x = min(max(x, 0.0), s)
    y = min(max(y, 0.0), s)
    return WorldPixel(x, y, z)


def world_pixel_to_latlon(p: WorldPixel) -> GeoPoint:
    """Closed-form inverse of :func:`latlon_to_world_pixel`."""
    s = p.zoom.world_size
    lon = p.x / s * 360.0 - 180.0
    lat = math.degrees(math.atan(math.sinh(math.pi * (1.0 - 2.0 * p.y / s))))
    lat = min(max(lat, -MAX_LATITUDE), MAX_LATITUDE)
    if lon >= 180.0:
        lon -= 360.0
    return GeoPoint(lat, lon)


def meters_per_pixel(lat: float, z: ZoomSpec) -> float:
    """Ground resolution at a latitude: cos(lat) * 2*pi*R / (512 * 2**zoom)."""
    return math.cos(math.radians(lat)) * 2.0 * math.pi * EARTH_RADIUS_M / z.world_size


@dataclass(frozen=True)
class SiteFrame:
    """Georeference of one stitched site image.

    ``origin_world`` is the world pixel of image pixel (0, 0), snapped to a
    tile boundary so the 3072 px extent covers whole tiles; it therefore sits
    within half a tile of the exactly-centered origin. ``meters_per_pixel``
    is evaluated once at the site center and treated as constant across the
    extent.
    """

    center: GeoPoint
    zoom: ZoomSpec
    origin_world: WorldPixel
    meters_per_pixel: float
    extent: int = IMAGE_SIZE

    def image_to_world(self, px: float, py: float) -> WorldPixel:
        return WorldPixel(self.origin_world.x + px, self.origin_world.y + py, self.zoom)

    def bottom_left(self) -> GeoPoint:
        return world_pixel_to_latlon(self.image_to_world(0.0, float(self.extent)))

    def top_right(self) -> GeoPoint:
        return world_pixel_to_latlon(self.image_to_world(float(self.extent), 0.0))


def make_site_frame(center: GeoPoint, z: ZoomSpec) -> SiteFrame:
    """Build the georeference for a 3072x3072 image centered on ``center``.

    Raises :class:`ZoomRangeError` outside zooms 19..21 and
    :class:`ProjectionRangeError` when the snapped extent would leave the
    world square.
    """
    lo, hi = SITE_ZOOM_RANGE
    if not lo <= z.zoom <= hi:
        raise ZoomRangeError(z.zoom)
    c = latlon_to_world_pixel(center, z)
    ox = round((c.x - HALF_IMAGE) / TILE_SIZE) * TILE_SIZE
    oy = round((c.y - HALF_IMAGE) / TILE_SIZE) * TILE_SIZE
    s = z.world_size
    if ox < 0 or oy < 0 or ox + IMAGE_SIZE > s or oy + IMAGE_SIZE > s:
        raise ProjectionRangeError(
            f"site extent around ({center.lat}, {center.lon}) leaves the world at zoom {z.zoom}"
        )
    return SiteFrame(
        center=center,
        zoom=z,
        origin_world=WorldPixel(float(ox), float(oy), z),
        meters_per_pixel=meters_per_pixel(center.lat, z),
    )


def pixel_to_local(p: tuple[float, float], f: SiteFrame) -> LocalCartesian:
    """Image pixel -> site-local meters (y axis flips to point north)."""
    px, py = p
    if not (0.0 <= px <= f.extent and 0.0 <= py <= f.extent):
        raise ProjectionRangeError(f"pixel ({px}, {py}) outside image extent {f.extent}")
    half = f.extent / 2.0
    return LocalCartesian((px - half) * f.meters_per_pixel, (half - py) * f.meters_per_pixel)


def local_to_pixel(c: LocalCartesian, f: SiteFrame) -> tuple[float, float]:
    """Inverse of :func:`pixel_to_local`; errors if it lands off the image."""
    half = f.extent / 2.0
    px = half + c.x_east / f.meters_per_pixel
    py = half - c.y_north / f.meters_per_pixel
    eps = 1e-6  # absorb fp noise right at the image edge
    if not (-eps <= px <= f.extent + eps and -eps <= py <= f.extent + eps):
        raise ProjectionRangeError(f"local point ({c.x_east}, {c.y_north}) maps outside the image")
    return min(max(px, 0.0), float(f.extent)), min(max(py, 0.0), float(f.extent))
