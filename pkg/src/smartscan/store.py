"""On-disk site store: folders, journal-based persistence, the site state
machine, and the orchestration of imagery, prompting, extraction and export.

Every site lives in ``{root}/{site_id}/`` holding image.png, tiles/,
prompts.json, mask.png, elements.json, journal.log and exports/. The
journal (JSON lines, strictly increasing ``seq``) is the source of truth:
state and elements are rebuilt by replaying it, which is also what makes
undo and restart-recovery trivial. elements.json and prompts.json are
materialized snapshots for humans and external tools.

Mutations acquire a per-site exclusive lock; reads are lock-free.
"""

from __future__ import annotations

import base64
import datetime as dt
import io
import json
import re
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests
from PIL import Image

from smartscan import constraints as cxmod
from smartscan import geo, imagery, prompts as prmod
from smartscan.config import ServiceConfig
from smartscan.constraints import ConstraintSet, ElementType, SiteElement
from smartscan.errors import (
    ConstraintValidationError,
    DegenerateGeometryError,
    MalformedTileError,
    SmartScanError,
    TileFetchError,
)
from smartscan.postprocess import (
    ConvexPolygon,
    PostprocessParams,
    crf_refine,
    extract_from_refined,
)
from smartscan.segbackend import segment_site

STATES = ("created", "image_ready", "prompts_ready", "extracted", "exported")
_ORDER = {s: i for i, s in enumerate(STATES)}

ZOOM_GUIDANCE = "change the zoom level and try again"


class StateError(SmartScanError):
    """Operation not allowed from the site's current state."""

    def __init__(self, site_id: str, state: str, needed: str):
        super().__init__(
            f"site {site_id!r} is in state {state!r}, operation needs {needed!r} or later"
        )


class ConflictError(SmartScanError):
    """Duplicate site name."""


class NotFoundError(SmartScanError):
    pass


class SidecarUnavailableError(SmartScanError):
    pass


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    if not slug:
        raise ValueError("site name must contain at least one alphanumeric character")
    return slug


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


@dataclass
class JobReport:
    job_id: str
    kind: str
    started: str
    finished: str = ""
    outcome: str = "running"
    message: list[str] = field(default_factory=list)

    def log(self, line: str) -> None:
        self.message.append(line)

    def finish(self, outcome: str) -> "JobReport":
        self.finished = _now()
        self.outcome = outcome
        return self

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "started": self.started,
            "finished": self.finished,
            "outcome": self.outcome,
            "message": self.message,
        }


def _new_job(kind: str) -> JobReport:
    return JobReport(job_id=uuid.uuid4().hex[:12], kind=kind, started=_now())


def element_to_doc(e: SiteElement) -> dict:
    return {
        "id": e.id,
        "type": e.type.value,
        "label": e.label,
        "provenance": e.provenance,
        "convex": e.convex,
        "vertices": [[x, y] for x, y in e.vertices],
    }


def element_from_doc(doc: dict) -> SiteElement:
    return SiteElement(
        id=doc["id"],
        type=ElementType(doc["type"]),
        vertices=tuple((float(x), float(y)) for x, y in doc["vertices"]),
        label=doc.get("label", ""),
        provenance=doc.get("provenance", "human"),
    )


@dataclass
class Site:
    id: str
    name: str
    lat: float
    lon: float
    zoom: int
    state: str = "created"
    elements: dict[str, SiteElement] = field(default_factory=dict)
    element_seq: int = 0
    prompt_doc: dict | None = None

    @property
    def frame(self) -> geo.SiteFrame:
        return geo.make_site_frame(geo.GeoPoint(self.lat, self.lon), geo.ZoomSpec(self.zoom))

    def to_dict(self) -> dict:
        f = self.frame
        bl, tr = f.bottom_left(), f.top_right()
        return {
            "id": self.id,
            "name": self.name,
            "lat": self.lat,
            "lon": self.lon,
            "zoom": self.zoom,
            "state": self.state,
            "meters_per_pixel": f.meters_per_pixel,
            "bottom_left": {"lat": bl.lat, "lon": bl.lon},
            "top_right": {"lat": tr.lat, "lon": tr.lon},
            "image_size": f.extent,
        }


class SiteStore:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.root = Path(config.data_root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sites: dict[str, Site] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._global = threading.Lock()
        self._image_cache: dict[str, np.ndarray] = {}
        for journal in sorted(self.root.glob("*/journal.log")):
            site = self._replay(journal)
            self._sites[site.id] = site
            self._locks[site.id] = threading.RLock()

    # ------------------------------------------------------------ plumbing

    def folder(self, site_id: str) -> Path:
        return self.root / site_id

    def _lock(self, site_id: str) -> threading.RLock:
        with self._global:
            return self._locks.setdefault(site_id, threading.RLock())

    def _journal_path(self, site_id: str) -> Path:
        return self.folder(site_id) / "journal.log"

    def _append(self, site: Site, op: str, data: dict) -> int:
        seq = getattr(site, "_journal_seq", 0) + 1
        site._journal_seq = seq
        entry = {"seq": seq, "ts": _now(), "op": op, "data": data}
        with self._journal_path(site.id).open("a") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        return seq

    def _snapshot_elements(self, site: Site) -> None:
        doc = {
            "elements": [element_to_doc(e) for e in site.elements.values()],
            "next_seq": site.element_seq,
        }
        (self.folder(site.id) / "elements.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n"
        )

    def _replay(self, journal_path: Path) -> Site:
        site: Site | None = None
        applied: list[dict] = []
        for line in journal_path.read_text().splitlines():
            entry = json.loads(line)
            if entry["op"] == "undo":
                for i in range(len(applied) - 1, -1, -1):
                    if applied[i]["op"].startswith("element_"):
                        del applied[i]
                        break
            else:
                applied.append(entry)
        for entry in applied:
            op, data = entry["op"], entry["data"]
            if op == "create":
                site = Site(
                    id=data["id"], name=data["name"], lat=data["lat"],
                    lon=data["lon"], zoom=data["zoom"],
                )
            elif op == "image_ready":
                site.state = self._advance(site.state, "image_ready")
            elif op == "prompts":
                site.prompt_doc = data["prompts"]
                site.state = self._advance(site.state, "prompts_ready")
            elif op == "extracted":
                site.elements = {
                    e.id: e
                    for e in site.elements.values()
                    if not (e.type is ElementType.SUBSPACE and e.provenance == "machine")
                }
                for doc in data["elements"]:
                    e = element_from_doc(doc)
                    site.elements[e.id] = e
                site.element_seq = max(site.element_seq, data.get("next_seq", 0))
                site.state = self._advance(site.state, "extracted")
            elif op == "element_create":
                e = element_from_doc(data["element"])
                site.elements[e.id] = e
                site.element_seq = max(site.element_seq, data.get("next_seq", 0))
            elif op == "element_delete":
                site.elements.pop(data["id"], None)
            elif op == "element_fragment":
                site.elements.pop(data["id"], None)
                for doc in data["elements"]:
                    e = element_from_doc(doc)
                    site.elements[e.id] = e
                site.element_seq = max(site.element_seq, data.get("next_seq", 0))
            elif op == "element_merge":
                for eid in data["ids"]:
                    site.elements.pop(eid, None)
                e = element_from_doc(data["element"])
                site.elements[e.id] = e
                site.element_seq = max(site.element_seq, data.get("next_seq", 0))
            elif op == "element_patch":
                e = element_from_doc(data["element"])
                site.elements[e.id] = e
            elif op == "exported":
                site.state = self._advance(site.state, "exported")
        if site is None:
            raise SmartScanError(f"journal {journal_path} has no create entry")
        # seq must continue from the raw journal, undone entries included
        last_line = journal_path.read_text().splitlines()[-1]
        site._journal_seq = json.loads(last_line)["seq"]
        return site

    @staticmethod
    def _advance(current: str, target: str) -> str:
        return target if _ORDER[target] > _ORDER[current] else current

    def _require_state(self, site: Site, needed: str) -> None:
        if _ORDER[site.state] < _ORDER[needed]:
            raise StateError(site.id, site.state, needed)

    def get(self, site_id: str) -> Site:
        site = self._sites.get(site_id)
        if site is None:
            raise NotFoundError(f"no site {site_id!r}")
        return site

    def list_sites(self) -> list[Site]:
        return [self._sites[k] for k in sorted(self._sites)]

    def _load_image(self, site: Site) -> imagery.SiteImage:
        pixels = self._image_cache.get(site.id)
        if pixels is None:
            path = self.folder(site.id) / "image.png"
            if not path.exists():
                raise StateError(site.id, site.state, "image_ready")
            pixels = np.asarray(Image.open(path).convert("RGB"))
            if len(self._image_cache) > 2:
                self._image_cache.clear()
            self._image_cache[site.id] = pixels
        return imagery.SiteImage(pixels, site.frame)

    # ------------------------------------------------------------ lifecycle

    def create_site(self, name: str, lat: float, lon: float, zoom: int
                    ) -> tuple[Site, JobReport]:
        site_id = slugify(name)
        job = _new_job("create_site")
        # validates zoom and projectability before any disk writes
        frame = geo.make_site_frame(geo.GeoPoint(lat, lon), geo.ZoomSpec(zoom))
        with self._global:
            existing = self._sites.get(site_id)
            if existing is not None and existing.state != "created":
                raise ConflictError(f"site {site_id!r} already exists")
            lock = self._locks.setdefault(site_id, threading.RLock())
        with lock:
            site = self._sites.get(site_id)
            if site is None:
                folder = self.folder(site_id)
                folder.mkdir(parents=True, exist_ok=True)
                (folder / "exports").mkdir(exist_ok=True)
                site = Site(id=site_id, name=name, lat=lat, lon=lon, zoom=zoom)
                self._sites[site_id] = site
                self._append(site, "create", {
                    "id": site_id, "name": name, "lat": lat, "lon": lon, "zoom": zoom,
                })
            job.log(f"site folder {self.folder(site_id)}")
            cfg = imagery.TileSourceConfig(
                url_template=self.config.tile_template,
                cache_dir=self.folder(site_id) / "tiles",
                retry_count=self.config.tile_retry_count,
                timeout=self.config.tile_timeout,
                parallelism=self.config.tile_parallelism,
            )
            job.log(f"fetching 36 tiles at zoom {zoom}")
            try:
                img = imagery.extract_site_image(frame, cfg)
            except (TileFetchError, MalformedTileError) as exc:
                job.log(str(exc))
                job.finish("failed")
                raise TileFetchError(f"{exc}; {ZOOM_GUIDANCE}") from exc
            imagery.save_site_image(img, self.folder(site_id) / "image.png")
            self._image_cache[site_id] = img.pixels
            site.state = self._advance(site.state, "image_ready")
            self._append(site, "image_ready", {})
            job.log("stitched 3072x3072 image written to image.png")
            return site, job.finish("ok")

    def put_prompts(self, site_id: str, ps: prmod.PromptSet) -> list[str]:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "image_ready")
            violations = prmod.validate(ps)
            if violations:
                return violations
            doc = prmod.to_json_dict(ps)
            doc["site"] = site_id
            prmod.save_prompts(prmod.from_json_dict(doc), self.folder(site_id) / "prompts.json")
            site.prompt_doc = doc
            site.state = self._advance(site.state, "prompts_ready")
            self._append(site, "prompts", {"prompts": doc})
            return []

    def auto_prompts(self, site_id: str, mode: str,
                     boxes: list[tuple[int, int]] | None = None) -> prmod.PromptSet:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "image_ready")
            if mode in ("baseline_center", "baseline_density"):
                box_prompts = self._boxes_for_baseline(site, boxes)
                if mode == "baseline_center":
                    ps = prmod.baseline_center(box_prompts, site_id)
                else:
                    ps = prmod.baseline_density(self._load_image(site).pixels, box_prompts, site_id)
            elif mode == "auto":
                ps = self._sidecar_prompts(site)
            else:
                raise ValueError(f"unknown prompting mode {mode!r}")
            violations = self.put_prompts(site_id, ps)
            if violations:  # a generator producing an invalid set is a bug
                raise SmartScanError("generated prompts invalid: " + "; ".join(violations))
            return ps

    def _boxes_for_baseline(self, site: Site, boxes) -> list[prmod.BoxPrompt]:
        if boxes:
            return [prmod.BoxPrompt(prmod.GridIndex(r, c)) for r, c in boxes]
        if site.prompt_doc:
            return [
                prmod.BoxPrompt(prmod.GridIndex(b["row"], b["col"]))
                for b in site.prompt_doc["boxes"]
            ]
        raise ValueError("baseline prompting needs boxes: none given and none stored")

    def _sidecar_prompts(self, site: Site) -> prmod.PromptSet:
        from smartscan.segbackend import rgb_to_png_b64

        if not self.config.sidecar_endpoint:
            raise SidecarUnavailableError(
                "auto prompting needs a configured sidecar exposing /auto_prompts; "
                "set sidecar_endpoint in the config or SMARTSCAN_SIDECAR"
            )
        img = self._load_image(site)
        try:
            resp = requests.post(
                f"{self.config.sidecar_endpoint}/auto_prompts",
                json={"image_png_b64": rgb_to_png_b64(img.pixels)},
                timeout=120,
            )
        except requests.RequestException as exc:
            raise SidecarUnavailableError(f"sidecar unreachable: {exc}") from exc
        if resp.status_code == 503:
            raise SidecarUnavailableError(f"sidecar has no prompt models loaded: {resp.text[:200]}")
        if resp.status_code != 200:
            raise SmartScanError(f"sidecar /auto_prompts failed: HTTP {resp.status_code}")
        doc = resp.json()
        boxes = []
        points = []
        for item in doc["heatmaps"]:
            g = prmod.GridIndex(item["row"], item["col"])
            boxes.append(prmod.BoxPrompt(g))
            raw = Image.open(io.BytesIO(base64.b64decode(item["heatmap_png_b64"]))).convert("L")
            values = np.asarray(raw, dtype=np.float64) / 255.0
            heat = prmod.Heatmap(values, sigma=float(item.get("sigma", prmod.DEFAULT_SIGMA)))
            x0, y0, _, _ = prmod.grid_rect(g)
            for px, py in prmod.find_peaks(heat):
                points.append(prmod.PointPrompt(g, x0 + px, y0 + py))
        return prmod.PromptSet(site.id, boxes, points, provenance="auto")

    # ------------------------------------------------------------ extraction

    def extract(self, site_id: str, postprocess_params: PostprocessParams | None = None
                ) -> tuple[list[SiteElement], JobReport]:
        site = self.get(site_id)
        job = _new_job("extract")
        with self._lock(site_id):
            self._require_state(site, "prompts_ready")
            ps = prmod.from_json_dict(site.prompt_doc)
            img = self._load_image(site)
            job.log(f"segmenting {len(ps.boxes)} grid cells with backend "
                    f"{self.config.backend.kind}")
            mask = segment_site(img, ps, self.config.backend)
            prm = postprocess_params or PostprocessParams()
            refined = crf_refine(mask, prm)
            Image.fromarray((refined * 255).astype(np.uint8), mode="L").save(
                self.folder(site_id) / "mask.png"
            )
            job.log(f"refined mask covers {int(refined.sum())} px; post-processing")
            polys = extract_from_refined(refined, prm)
            new_elements = []
            for poly in polys:
                site.element_seq += 1
                new_elements.append(SiteElement(
                    id=f"e{site.element_seq}",
                    type=ElementType.SUBSPACE,
                    vertices=poly.vertices,
                    label="",
                    provenance="machine",
                ))
            site.elements = {
                e.id: e
                for e in site.elements.values()
                if not (e.type is ElementType.SUBSPACE and e.provenance == "machine")
            }
            for e in new_elements:
                site.elements[e.id] = e
            site.state = self._advance(site.state, "extracted")
            self._append(site, "extracted", {
                "elements": [element_to_doc(e) for e in new_elements],
                "next_seq": site.element_seq,
            })
            self._snapshot_elements(site)
            job.log(f"{len(new_elements)} subspace polygons extracted")
            return new_elements, job.finish("ok")

    # -------------------------------------------------------------- elements

    def list_elements(self, site_id: str) -> list[SiteElement]:
        site = self.get(site_id)
        return [site.elements[k] for k in sorted(site.elements, key=_element_sort_key)]

    def get_element(self, site_id: str, eid: str) -> SiteElement:
        site = self.get(site_id)
        if eid not in site.elements:
            raise NotFoundError(f"no element {eid!r} in site {site_id!r}")
        return site.elements[eid]

    def create_element(self, site_id: str, etype: str, vertices, label: str = "") -> SiteElement:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "image_ready")
            site.element_seq += 1
            e = SiteElement(
                id=f"e{site.element_seq}",
                type=ElementType(etype),
                vertices=tuple((float(x), float(y)) for x, y in vertices),
                label=label,
                provenance="human",
            )
            site.elements[e.id] = e
            self._append(site, "element_create", {
                "element": element_to_doc(e), "next_seq": site.element_seq,
            })
            self._snapshot_elements(site)
            return e

    def delete_element(self, site_id: str, eid: str) -> None:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "extracted")
            self.get_element(site_id, eid)
            del site.elements[eid]
            self._append(site, "element_delete", {"id": eid})
            self._snapshot_elements(site)

    def fragment_element(self, site_id: str, eid: str) -> list[SiteElement]:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "extracted")
            e = self.get_element(site_id, eid)
            if not e.convex:
                raise DegenerateGeometryError(f"element {eid} is not convex; cannot fragment")
            pieces = cxmod.fragment(ConvexPolygon(e.vertices))
            out = []
            for piece in pieces:
                site.element_seq += 1
                out.append(SiteElement(
                    id=f"e{site.element_seq}", type=e.type, vertices=piece.vertices,
                    label=e.label, provenance="human",
                ))
            del site.elements[eid]
            for ne in out:
                site.elements[ne.id] = ne
            self._append(site, "element_fragment", {
                "id": eid,
                "elements": [element_to_doc(x) for x in out],
                "next_seq": site.element_seq,
            })
            self._snapshot_elements(site)
            return out

    def merge_elements(self, site_id: str, ids: list[str]) -> SiteElement:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "extracted")
            if not ids:
                raise ValueError("merge needs at least one element id")
            elems = [self.get_element(site_id, eid) for eid in ids]
            types = {e.type for e in elems}
            if len(types) != 1:
                raise ValueError("cannot merge elements of different types")
            merged = cxmod.merge([ConvexPolygon(e.vertices) for e in elems])
            site.element_seq += 1
            ne = SiteElement(
                id=f"e{site.element_seq}", type=elems[0].type, vertices=merged.vertices,
                label=elems[0].label, provenance="human",
            )
            for eid in ids:
                del site.elements[eid]
            site.elements[ne.id] = ne
            self._append(site, "element_merge", {
                "ids": list(ids), "element": element_to_doc(ne), "next_seq": site.element_seq,
            })
            self._snapshot_elements(site)
            return ne

    def patch_element(self, site_id: str, eid: str, *, vertices=None, edit: dict | None = None,
                      etype: str | None = None, label: str | None = None) -> SiteElement:
        site = self.get(site_id)
        with self._lock(site_id):
            self._require_state(site, "extracted")
            e = self.get_element(site_id, eid)
            verts = e.vertices
            if edit is not None:
                result = cxmod.edit_vertex(
                    verts, edit["op"], int(edit["index"]), tuple(edit.get("point") or ()) or None
                )
                verts = result.vertices
            if vertices is not None:
                verts = tuple((float(x), float(y)) for x, y in vertices)
            ne = SiteElement(
                id=eid,
                type=ElementType(etype) if etype is not None else e.type,
                vertices=verts,
                label=e.label if label is None else label,
                provenance="human",
            )
            site.elements[eid] = ne
            self._append(site, "element_patch", {"element": element_to_doc(ne)})
            self._snapshot_elements(site)
            return ne

    def undo_last(self, site_id: str) -> None:
        """Journal-based undo of the most recent element mutation."""
        site = self.get(site_id)
        with self._lock(site_id):
            self._append(site, "undo", {})
            rebuilt = self._replay(self._journal_path(site_id))
            site.elements = rebuilt.elements
            site.element_seq = rebuilt.element_seq
            site.state = rebuilt.state
            site.prompt_doc = rebuilt.prompt_doc
            site._journal_seq = rebuilt._journal_seq
            self._snapshot_elements(site)

    # ---------------------------------------------------------------- export

    def constraint_set(self, site_id: str) -> ConstraintSet:
        site = self.get(site_id)
        return ConstraintSet(
            name=site.name,
            center=geo.GeoPoint(site.lat, site.lon),
            zoom=site.zoom,
            meters_per_pixel=site.frame.meters_per_pixel,
            elements=list(self.list_elements(site_id)),
            extent=site.frame.extent,
        )

    def export_site(self, site_id: str) -> dict[str, str]:
        site = self.get(site_id)
        with self._lock(site_id):
            cs = self.constraint_set(site_id)
            manifest = cxmod.export(cs, self.folder(site_id) / "exports")
            site.state = self._advance(site.state, "exported")
            self._append(site, "exported", {"manifest": manifest})
            return manifest


def _element_sort_key(eid: str):
    m = re.fullmatch(r"e(\d+)", eid)
    return (0, int(m.group(1)), "") if m else (1, 0, eid)
