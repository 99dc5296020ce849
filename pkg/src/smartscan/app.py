"""HTTP facade over the site store.

REST/JSON endpoints for the full site lifecycle plus static hosting of the
browser annotation bundle when one is built. All geometry decisions happen
in the library modules; this layer only translates errors to status codes:
404 unknown ids, 409 state machine / name conflicts, 422 validation and
geometry, 400 bad parameters, 502 tile or backend failures, 503 missing
sidecar.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import APIRouter, FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from smartscan import constraints as cxmod
from smartscan import prompts as prmod
from smartscan.config import ServiceConfig
from smartscan.errors import (
    BackendError,
    ConstraintValidationError,
    DegenerateGeometryError,
    MalformedTileError,
    ProjectionRangeError,
    TileFetchError,
    ZoomRangeError,
)
from smartscan.store import (
    ConflictError,
    NotFoundError,
    SidecarUnavailableError,
    SiteStore,
    StateError,
    element_to_doc,
)


class SiteCreateBody(BaseModel):
    name: str = Field(min_length=1)
    lat: float
    lon: float
    zoom: int


class GridRef(BaseModel):
    row: int
    col: int


class PointRef(BaseModel):
    row: int
    col: int
    x: int
    y: int


class PromptSetBody(BaseModel):
    provenance: str = "manual"
    boxes: list[GridRef] = Field(default_factory=list)
    points: list[PointRef] = Field(default_factory=list)


class AutoPromptBody(BaseModel):
    mode: str
    boxes: list[GridRef] | None = None


class ElementCreateBody(BaseModel):
    type: str
    vertices: list[tuple[float, float]]
    label: str = ""


class VertexEdit(BaseModel):
    op: str
    index: int
    point: tuple[float, float] | None = None


class ElementPatchBody(BaseModel):
    vertices: list[tuple[float, float]] | None = None
    edit: VertexEdit | None = None
    type: str | None = None
    label: str | None = None


class MergeBody(BaseModel):
    ids: list[str]


def _prompt_set(site_id: str, body: PromptSetBody) -> prmod.PromptSet:
    return prmod.from_json_dict({
        "site": site_id,
        "provenance": body.provenance,
        "boxes": [b.model_dump() for b in body.boxes],
        "points": [p.model_dump() for p in body.points],
    })


def create_app(config: ServiceConfig | None = None, store: SiteStore | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = store or SiteStore(config)
    app = FastAPI(title="smartscan", version="0.1.0")
    app.state.store = store
    api = APIRouter()

    @app.exception_handler(NotFoundError)
    async def _nf(_: Request, exc):  # pragma: no cover - trivial glue
        return JSONResponse({"detail": str(exc)}, status_code=404)

    @app.exception_handler(ConflictError)
    @app.exception_handler(StateError)
    async def _conflict(_: Request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=409)

    @app.exception_handler(ZoomRangeError)
    @app.exception_handler(ProjectionRangeError)
    @app.exception_handler(ValueError)
    async def _bad(_: Request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=400)

    @app.exception_handler(DegenerateGeometryError)
    async def _geom(_: Request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=422)

    @app.exception_handler(ConstraintValidationError)
    async def _invalid(_: Request, exc):
        return JSONResponse(
            {"detail": "constraint set invalid", "violations": exc.violations},
            status_code=422,
        )

    @app.exception_handler(TileFetchError)
    @app.exception_handler(MalformedTileError)
    @app.exception_handler(BackendError)
    async def _upstream(_: Request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=502)

    @app.exception_handler(SidecarUnavailableError)
    async def _sidecar(_: Request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=503)

    # ------------------------------------------------------------- sites

    @api.post("/sites", status_code=201)
    def create_site(body: SiteCreateBody):
        site, job = store.create_site(body.name, body.lat, body.lon, body.zoom)
        return {"site": site.to_dict(), "job": job.to_dict()}

    @api.get("/sites")
    def list_sites():
        return {"sites": [s.to_dict() for s in store.list_sites()]}

    @api.get("/sites/{site_id}")
    def get_site(site_id: str):
        return {"site": store.get(site_id).to_dict()}

    @api.get("/sites/{site_id}/image")
    def get_image(site_id: str):
        store.get(site_id)
        path = store.folder(site_id) / "image.png"
        if not path.exists():
            raise NotFoundError(f"site {site_id!r} has no image yet")
        return FileResponse(path, media_type="image/png")

    # ----------------------------------------------------------- prompts

    @api.put("/sites/{site_id}/prompts")
    def put_prompts(site_id: str, body: PromptSetBody):
        violations = store.put_prompts(site_id, _prompt_set(site_id, body))
        if violations:
            return JSONResponse({"violations": violations}, status_code=422)
        return {"violations": []}

    @api.get("/sites/{site_id}/prompts")
    def get_prompts(site_id: str):
        site = store.get(site_id)
        if site.prompt_doc is None:
            raise NotFoundError(f"site {site_id!r} has no prompts yet")
        return site.prompt_doc

    @api.post("/sites/{site_id}/prompts/auto")
    def auto_prompts(site_id: str, body: AutoPromptBody):
        boxes = [(b.row, b.col) for b in body.boxes] if body.boxes else None
        ps = store.auto_prompts(site_id, body.mode, boxes)
        return prmod.to_json_dict(ps)

    # ---------------------------------------------------------- extraction

    @api.post("/sites/{site_id}/extract")
    def extract(site_id: str):
        elements, job = store.extract(site_id)
        return {"elements": [element_to_doc(e) for e in elements], "job": job.to_dict()}

    @api.get("/sites/{site_id}/mask")
    def get_mask(site_id: str):
        store.get(site_id)
        path = store.folder(site_id) / "mask.png"
        if not path.exists():
            raise NotFoundError(f"site {site_id!r} has no mask yet")
        return FileResponse(path, media_type="image/png")

    # ------------------------------------------------------------ elements

    @api.get("/sites/{site_id}/elements")
    def list_elements(site_id: str):
        return {"elements": [element_to_doc(e) for e in store.list_elements(site_id)]}

    @api.post("/sites/{site_id}/elements", status_code=201)
    def create_element(site_id: str, body: ElementCreateBody):
        e = store.create_element(site_id, body.type, body.vertices, body.label)
        return {"element": element_to_doc(e)}

    @api.get("/sites/{site_id}/elements/{eid}")
    def get_element(site_id: str, eid: str):
        return {"element": element_to_doc(store.get_element(site_id, eid))}

    @api.delete("/sites/{site_id}/elements/{eid}", status_code=204)
    def delete_element(site_id: str, eid: str):
        store.delete_element(site_id, eid)

    @api.post("/sites/{site_id}/elements/{eid}/fragment")
    def fragment_element(site_id: str, eid: str):
        out = store.fragment_element(site_id, eid)
        return {"elements": [element_to_doc(e) for e in out]}

    @api.post("/sites/{site_id}/elements/merge")
    def merge_elements(site_id: str, body: MergeBody):
        e = store.merge_elements(site_id, body.ids)
        return {"element": element_to_doc(e)}

    @api.patch("/sites/{site_id}/elements/{eid}")
    def patch_element(site_id: str, eid: str, body: ElementPatchBody):
        e = store.patch_element(
            site_id, eid,
            vertices=body.vertices,
            edit=body.edit.model_dump() if body.edit else None,
            etype=body.type,
            label=body.label,
        )
        return {"element": element_to_doc(e)}

    @api.get("/sites/{site_id}/elements/{eid}/halfspace")
    def element_halfspace(site_id: str, eid: str):
        e = store.get_element(site_id, eid)
        n, d, s = cxmod.halfspace(e.as_linear_constraint())
        return {"normal": [n[0], n[1]], "offset": d, "infeasible_sign": s}

    # -------------------------------------------------------------- export

    @api.post("/sites/{site_id}/export")
    def export_site(site_id: str):
        manifest = store.export_site(site_id)
        return {"files": manifest}

    @api.get("/sites/{site_id}/exports/{name}")
    def get_export(site_id: str, name: str):
        store.get(site_id)
        if name not in cxmod.EXPORT_FILES:
            raise NotFoundError(f"unknown export file {name!r}")
        path = store.folder(site_id) / "exports" / name
        if not path.exists():
            raise NotFoundError(f"site {site_id!r} has not exported {name!r}")
        return FileResponse(path, media_type="application/json")

    app.include_router(api)
    bundle = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if bundle.is_dir():  # serve the browser annotation UI when built
        app.mount("/ui", StaticFiles(directory=bundle, html=True), name="ui")
    return app
