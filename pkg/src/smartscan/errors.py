"""Exception hierarchy shared across the pipeline."""


class SmartScanError(Exception):
    """Base class for all library errors."""


class ProjectionRangeError(SmartScanError, ValueError):
    """Coordinate outside the projectable / addressable range."""


class ZoomRangeError(SmartScanError, ValueError):
    """Zoom level outside the supported [19, 21] site-creation range."""

    guidance = "change the zoom level and try again"

    def __init__(self, zoom: int):
        super().__init__(f"zoom {zoom} unsupported, expected 19..21; {self.guidance}")
        self.zoom = zoom


class TileFetchError(SmartScanError):
    """Tile could not be retrieved after the configured retries."""


class MalformedTileError(SmartScanError):
    """Fetched tile decoded to something other than 512x512x3."""


class DimensionMismatchError(SmartScanError, ValueError):
    """Raster input has the wrong shape or count."""


class BackendError(SmartScanError):
    """Segmentation backend failure, tagged with the grid it was processing."""

    def __init__(self, message: str, grid=None):
        if grid is not None:
            message = f"grid ({grid[0]},{grid[1]}): {message}"
        super().__init__(message)
        self.grid = tuple(grid) if grid is not None else None


class MissingFixtureError(BackendError):
    """Fixture backend has no stored mask for the requested grid."""


class DegenerateGeometryError(SmartScanError, ValueError):
    """Fewer than 3 points, collinear input, or an edit below a triangle."""


class ConstraintValidationError(SmartScanError, ValueError):
    """Constraint set failed validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
