"""Satellite site imagery to convex subspace polygons and constraint sets.

The pipeline goes: GPS center -> stitched 3072x3072 satellite image ->
grid box/point prompts -> promptable segmentation backend -> binary mask ->
convex subspace polygons -> facility constraint set exported as JSON for
downstream sensor-placement optimization.

Submodules are imported explicitly (``from smartscan import geo``) so that
the numeric core stays importable without the HTTP service dependencies.
"""

__version__ = "0.1.0"
