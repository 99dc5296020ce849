"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its elapsed time. Run with ``pytest -v`` (or ``-s`` for
the inline lines). Everything here runs against mock/fixture backends only.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
from fastapi.testclient import TestClient

from smartscan import constraints as cx
from smartscan import geo, imagery, postprocess as pp, prompts as pr
from smartscan.app import create_app
from smartscan.config import ServiceConfig
from smartscan.errors import DegenerateGeometryError
from smartscan.segbackend import BackendDescriptor, segment_site
from smartscan.store import SiteStore

from oracles import brute_force_hull, crf_reference
from scene import build_scene, mean_iou, prompts_for_blobs
from servers import TileServer, expected_site_pixel


@contextmanager
def criterion(n, label):
    t0 = time.time()
    try:
        yield
    except Exception:
        print(f"FAIL criterion {n}: {label} ({time.time() - t0:.1f}s)")
        raise
    print(f"PASS criterion {n}: {label} ({time.time() - t0:.1f}s)")


# ---------------------------------------------------------------------- 1


def test_acceptance_01_geo_round_trip():
    with criterion(1, "geo round-trips below 1e-9 degree / 1e-9 m"):
        rng = np.random.default_rng(1)
        for zoom in (19, 20, 21):
            z = geo.ZoomSpec(zoom)
            lats = rng.uniform(-85.0, 85.0, size=10000)
            lons = rng.uniform(-180.0, 179.999999, size=10000)
            for lat, lon in zip(lats, lons):
                g = geo.GeoPoint(lat, lon)
                back = geo.world_pixel_to_latlon(geo.latlon_to_world_pixel(g, z))
                assert abs(back.lat - g.lat) < 1e-9
                assert abs(back.lon - g.lon) < 1e-9
        frame = geo.SiteFrame(
            center=geo.GeoPoint(40.0, -100.0),
            zoom=geo.ZoomSpec(20),
            origin_world=geo.WorldPixel(0, 0, geo.ZoomSpec(20)),
            meters_per_pixel=geo.meters_per_pixel(40.0, geo.ZoomSpec(20)),
        )
        pxs = rng.uniform(0, 3072, size=(10000, 2))
        for px, py in pxs:
            local = geo.pixel_to_local((px, py), frame)
            qx, qy = geo.local_to_pixel(local, frame)
            assert abs(qx - px) * frame.meters_per_pixel < 1e-9
            assert abs(qy - py) * frame.meters_per_pixel < 1e-9


# ---------------------------------------------------------------------- 2


def test_acceptance_02_stitch_exactness(tmp_path):
    with criterion(2, "36-tile plan and stitch match the placement oracle"):
        frame = geo.make_site_frame(geo.GeoPoint(35.0, -101.0), geo.ZoomSpec(19))
        keys = imagery.plan_tiles(frame)
        assert len(keys) == 36
        assert len(set(keys)) == 36
        with TileServer() as tiles:
            cfg = imagery.TileSourceConfig(tiles.template, tmp_path / "cache")
            img = imagery.extract_site_image(frame, cfg)
        rng = np.random.default_rng(2)
        ox, oy = int(frame.origin_world.x), int(frame.origin_world.y)
        xs = rng.integers(0, 3072, size=10000)
        ys = rng.integers(0, 3072, size=10000)
        mismatches = sum(
            tuple(img.pixels[y, x]) != expected_site_pixel(ox, oy, int(x), int(y))
            for x, y in zip(xs, ys)
        )
        assert mismatches == 0


# ---------------------------------------------------------------------- 3


def _scatter(rng, k, extent, min_sep):
    pts, tries = [], 0
    while len(pts) < k and tries < 50000:
        tries += 1
        x = int(rng.integers(0, extent[1]))
        y = int(rng.integers(0, extent[0]))
        if all((x - a) ** 2 + (y - b) ** 2 > min_sep**2 for a, b in pts):
            pts.append((x, y))
    return pts


def test_acceptance_03_heatmap_peak_recovery():
    with criterion(3, "peak finding recovers all generators within 1 px"):
        rng = np.random.default_rng(3)
        for i in range(100):
            sigma = float(rng.choice([4.0, 8.0, 16.0]))
            extent = (int(40 * sigma), int(40 * sigma))
            k = int(rng.integers(1, 21))
            pts = _scatter(rng, k, extent, 4 * sigma + 1e-9)
            h = pr.render_heatmap(pts, sigma=sigma, extent=extent)
            peaks = pr.find_peaks(h, pr.PeakParams(threshold=0.5, min_separation=sigma))
            assert len(peaks) == len(pts), f"set {i}: {len(peaks)} peaks for {len(pts)} points"
            for x, y in pts:
                d2 = min((x - px) ** 2 + (y - py) ** 2 for px, py in peaks)
                assert d2 <= 1.0


# ---------------------------------------------------------------------- 4


def test_acceptance_04_hull_brute_force_equivalence():
    with criterion(4, "monotone-chain hull equals O(n^3) brute force on 1000 sets"):
        rng = np.random.default_rng(4)
        done = 0
        while done < 1000:
            n = int(rng.integers(3, 13))
            pts = rng.random((n, 2)) * 200.0
            try:
                got = pp.convex_hull(pts)
            except DegenerateGeometryError:
                continue
            want = brute_force_hull(pts.tolist())
            assert list(got.vertices) == [tuple(p) for p in want]
            done += 1


# ---------------------------------------------------------------------- 5


def _max_dist_to_boundary(points, poly):
    v = poly.vertices
    return max(
        min(pp._point_segment_distance(q, v[i], v[(i + 1) % len(v)]) for i in range(len(v)))
        for q in points
    )


def test_acceptance_05_rdp_bound():
    with criterion(5, "RDP keeps Hausdorff <= 2 px and convexity on 200 polygons"):
        rng = np.random.default_rng(5)
        done = 0
        while done < 200:
            kind = done % 4
            if kind == 0:
                n = int(rng.integers(6, 64))
                r = float(rng.uniform(20, 400))
                cx_, cy_ = rng.uniform(500, 2500, size=2)
                ring = [
                    (cx_ + r * math.cos(2 * math.pi * i / n), cy_ + r * math.sin(2 * math.pi * i / n))
                    for i in range(n)
                ]
                poly = pp.ConvexPolygon(ring)
            else:
                try:
                    poly = pp.convex_hull(rng.uniform(0, 3000, size=(int(rng.integers(8, 60)), 2)))
                except DegenerateGeometryError:
                    continue
            out = pp.simplify(poly, 2.0)
            assert isinstance(out, pp.ConvexPolygon)  # construction enforces convexity
            assert set(out.vertices) <= set(poly.vertices)
            assert _max_dist_to_boundary(poly.vertices, out) <= 2.0
            done += 1


# ---------------------------------------------------------------------- 6


def test_acceptance_06_crf_reference_equivalence():
    with criterion(6, "mean-field smoothing equals the independent recursion"):
        prm = pp.PostprocessParams()
        for bits in range(512):
            mask = np.array([(bits >> i) & 1 for i in range(9)], dtype=np.uint8).reshape(3, 3)
            want = np.array(crf_reference(mask.tolist(), 0.9, 1.0, 5), dtype=np.uint8)
            assert (pp.crf_refine(mask, prm) == want).all()
        rng = np.random.default_rng(6)
        for _ in range(100):
            mask = rng.integers(0, 2, size=(5, 5)).astype(np.uint8)
            want = np.array(crf_reference(mask.tolist(), 0.9, 1.0, 5), dtype=np.uint8)
            assert (pp.crf_refine(mask, prm) == want).all()
        speck = np.zeros((9, 9), dtype=np.uint8)
        speck[4, 4] = 1
        assert not pp.crf_refine(speck, prm).any()


# ---------------------------------------------------------------------- 7


def test_acceptance_07_end_to_end_miou():
    with criterion(7, "synthetic 5-blob extraction reaches mean IoU >= 0.90"):
        pixels, blobs = build_scene(seed=7)
        ps = prompts_for_blobs(blobs)
        mask = segment_site(pixels, ps, BackendDescriptor(color_tolerance=10.0))
        polys = pp.extract_subspaces(mask, pp.PostprocessParams())
        assert len(polys) == len(blobs)
        miou = mean_iou(polys, blobs)
        print(f"  mean IoU = {miou:.4f} over {len(blobs)} blobs")
        assert miou >= 0.90


# ---------------------------------------------------------------------- 8


def test_acceptance_08_constraint_geometry(tmp_path):
    with criterion(8, "half-space, fragment/merge, sampling and export checks"):
        rng = np.random.default_rng(8)
        # 100 random triangles: witness infeasible, its reflection feasible
        done = 0
        while done < 100:
            p1, p2, p3 = rng.normal(scale=100, size=(3, 2))
            try:
                lc = cx.LinearConstraint(tuple(p1), tuple(p2), tuple(p3))
                n, d, s = cx.halfspace(lc)
            except DegenerateGeometryError:
                continue
            assert cx.infeasible_side(tuple(p3), lc)
            v = n[0] * p3[0] + n[1] * p3[1] - d
            assert not cx.infeasible_side((p3[0] - 2 * v * n[0], p3[1] - 2 * v * n[1]), lc)
            done += 1
        # fragment/merge conservation
        for _ in range(50):
            poly = pp.convex_hull(rng.uniform(0, 1000, size=(10, 2)))
            pieces = cx.fragment(poly)
            total = sum(q.area() for q in pieces)
            assert abs(total - poly.area()) / poly.area() < 1e-6
            merged = cx.merge(pieces)
            assert abs(merged.area() - poly.area()) / poly.area() < 1e-6
            # same hull region: boundaries coincide to fp noise both ways
            assert _max_dist_to_boundary(merged.vertices, poly) < 1e-6
            assert _max_dist_to_boundary(poly.vertices, merged) < 1e-6
        # sampling: containment, chi-square uniformity on the unit square
        square = pp.ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        pts = cx.sample_in_polygon(square, 10000, seed=88)
        assert square.contains_many(pts).all()
        bins, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=4, range=[[0, 1], [0, 1]])
        chi2 = ((bins - 625.0) ** 2 / 625.0).sum()
        from scipy import stats

        assert chi2 < stats.chi2.ppf(0.999, df=15)
        # export round-trip identity and byte-stable re-export
        elements = [
            cx.SiteElement("bounds", cx.ElementType.SITE_BOUNDS,
                           ((10, 10), (3000, 15), (2990, 3050), (12, 3020))),
            cx.SiteElement("s1", cx.ElementType.SUBSPACE,
                           tuple(pp.convex_hull(rng.uniform(100, 2900, size=(9, 2))).vertices)),
            cx.SiteElement("z1", cx.ElementType.EXCLUSION_ZONE,
                           tuple(pp.convex_hull(rng.uniform(100, 2900, size=(6, 2))).vertices)),
            cx.SiteElement("l1", cx.ElementType.LINEAR_CONSTRAINT,
                           ((101.5, 2000.25), (2900.125, 2100.0), (1500.0, 2901.0))),
        ]
        cs = cx.ConstraintSet("acc", geo.GeoPoint(36.1, -115.2), 20, 0.120551, elements)
        cx.export(cs, tmp_path / "a")
        back = cx.import_(tmp_path / "a")
        assert back == cs
        cx.export(back, tmp_path / "b")
        for name in cx.EXPORT_FILES:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# ---------------------------------------------------------------------- 9

LAT, LON, ZOOM = 33.2, -97.7, 19
_ORDER = {"missing": -1, "created": 0, "image_ready": 1, "prompts_ready": 2,
          "extracted": 3, "exported": 4}


class _Model:
    """Expected-state mirror used to check the transition table."""

    def __init__(self):
        self.sites = {}  # id -> state

    def state(self, sid):
        return self.sites.get(sid, "missing")


def _valid_prompt_body(rng):
    cells = rng.choice(144, size=int(rng.integers(1, 4)), replace=False)
    boxes, points = [], []
    for c in cells:
        row, col = divmod(int(c), 12)
        boxes.append({"row": row, "col": col})
        points.append({
            "row": row, "col": col,
            "x": col * 256 + int(rng.integers(0, 256)),
            "y": row * 256 + int(rng.integers(0, 256)),
        })
    return {"provenance": "manual", "boxes": boxes, "points": points}


def test_acceptance_09_service_state_machine(tmp_path):
    with criterion(9, "state machine, persistence and journal serialization"):
        rng = np.random.default_rng(9)
        names = ["alpha", "beta", "gamma"]
        with TileServer() as tiles:
            config = ServiceConfig(
                data_root=tmp_path / "sites",
                tile_template=tiles.template,
                backend=BackendDescriptor("mock_floodfill", color_tolerance=10.0),
            )
            store = SiteStore(config)
            client = TestClient(create_app(config, store), raise_server_exceptions=False)
            model = _Model()
            element_pool: dict[str, list[str]] = {n: [] for n in names}

            def element_doc_ids(sid):
                r = client.get(f"/sites/{sid}/elements")
                return [e["id"] for e in r.json()["elements"]] if r.status_code == 200 else []

            ops = ["create", "prompts", "auto", "extract", "el_create", "el_delete",
                   "el_fragment", "el_merge", "el_patch", "export"]
            weights = np.array([0.08, 0.16, 0.06, 0.06, 0.2, 0.1, 0.1, 0.06, 0.1, 0.08])
            weights = weights / weights.sum()
            for step in range(200):
                sid = names[int(rng.integers(len(names)))]
                op = str(rng.choice(ops, p=weights))
                st = model.state(sid)
                if op == "create":
                    r = client.post("/sites", json={
                        "name": sid, "lat": LAT, "lon": LON, "zoom": ZOOM,
                    })
                    if r.status_code == 201:
                        assert st in ("missing", "created"), f"step {step}: create from {st}"
                        model.sites[sid] = "image_ready"
                    else:
                        assert r.status_code == 409 and st not in ("missing",)
                elif op == "prompts":
                    r = client.put(f"/sites/{sid}/prompts", json=_valid_prompt_body(rng))
                    if r.status_code == 200:
                        assert _ORDER[st] >= _ORDER["image_ready"], f"step {step}: prompts from {st}"
                        model.sites[sid] = max(st, "prompts_ready", key=lambda s: _ORDER[s])
                    else:
                        assert r.status_code in (404, 409)
                        assert _ORDER[st] < _ORDER["image_ready"]
                elif op == "auto":
                    body = {"mode": "baseline_center", "boxes": [{"row": 1, "col": 1}]}
                    r = client.post(f"/sites/{sid}/prompts/auto", json=body)
                    if r.status_code == 200:
                        assert _ORDER[st] >= _ORDER["image_ready"]
                        model.sites[sid] = max(st, "prompts_ready", key=lambda s: _ORDER[s])
                    else:
                        assert r.status_code in (404, 409)
                        assert _ORDER[st] < _ORDER["image_ready"]
                elif op == "extract":
                    r = client.post(f"/sites/{sid}/extract")
                    if r.status_code == 200:
                        assert _ORDER[st] >= _ORDER["prompts_ready"], f"step {step}: extract from {st}"
                        model.sites[sid] = max(st, "extracted", key=lambda s: _ORDER[s])
                        element_pool[sid] = element_doc_ids(sid)
                    else:
                        assert r.status_code in (404, 409)
                        assert _ORDER[st] < _ORDER["prompts_ready"]
                elif op == "el_create":
                    x0 = int(rng.integers(0, 2800))
                    y0 = int(rng.integers(0, 2800))
                    r = client.post(f"/sites/{sid}/elements", json={
                        "type": "subspace",
                        "vertices": [[x0, y0], [x0 + 100, y0], [x0 + 100, y0 + 80], [x0, y0 + 80]],
                    })
                    if r.status_code == 201:
                        assert _ORDER[st] >= _ORDER["image_ready"], f"step {step}: el_create from {st}"
                        element_pool[sid].append(r.json()["element"]["id"])
                    else:
                        assert _ORDER[st] < _ORDER["image_ready"]
                elif op in ("el_delete", "el_fragment", "el_patch"):
                    pool = element_pool[sid]
                    eid = pool[int(rng.integers(len(pool)))] if pool else "e999"
                    if op == "el_delete":
                        r = client.delete(f"/sites/{sid}/elements/{eid}")
                        ok = r.status_code == 204
                    elif op == "el_fragment":
                        r = client.post(f"/sites/{sid}/elements/{eid}/fragment")
                        ok = r.status_code == 200
                    else:
                        r = client.patch(f"/sites/{sid}/elements/{eid}", json={"label": "touched"})
                        ok = r.status_code == 200
                    if ok:
                        assert _ORDER[st] >= _ORDER["extracted"], f"step {step}: {op} from {st}"
                        element_pool[sid] = element_doc_ids(sid)
                    elif r.status_code in (404, 422):
                        pass  # unknown element or geometry refusal, not a state violation
                    else:
                        assert r.status_code == 409 and _ORDER[st] < _ORDER["extracted"]
                elif op == "el_merge":
                    pool = element_pool[sid][:2]
                    r = client.post(f"/sites/{sid}/elements/merge", json={"ids": pool or ["e9"]})
                    if r.status_code == 200:
                        assert _ORDER[st] >= _ORDER["extracted"], f"step {step}: merge from {st}"
                        element_pool[sid] = element_doc_ids(sid)
                    elif r.status_code == 409:
                        assert _ORDER[st] < _ORDER["extracted"]
                elif op == "export":
                    r = client.post(f"/sites/{sid}/export")
                    if r.status_code == 200:
                        assert st != "missing"
                        model.sites[sid] = "exported"
                    else:
                        assert r.status_code in (404, 422)
                # observed state never contradicts the model
                if model.state(sid) != "missing":
                    got = client.get(f"/sites/{sid}").json()["site"]["state"]
                    assert got == model.state(sid), f"step {step}: {got} != {model.state(sid)}"

            # restart: a fresh store rebuilt from disk reproduces everything
            store2 = SiteStore(config)
            for sid, st in model.sites.items():
                site2 = store2.get(sid)
                assert site2.state == st
                assert site2.elements == store.get(sid).elements
            # concurrent mutations on one site serialize in the journal
            ready = [s for s, st in model.sites.items() if _ORDER[st] >= 3]
            sid = ready[0] if ready else None
            if sid is None:
                client.put("/sites/alpha/prompts", json=_valid_prompt_body(rng))
                client.post("/sites/alpha/extract")
                sid = "alpha"
            from concurrent.futures import ThreadPoolExecutor

            def add(i):
                store.create_element(sid, "subspace",
                                     [(i, 0), (i + 5, 0), (i + 5, 5), (i, 5)])

            with ThreadPoolExecutor(max_workers=8) as pool:
                list(pool.map(add, range(1, 31)))
            lines = (tmp_path / "sites" / sid / "journal.log").read_text().splitlines()
            seqs = [json.loads(l)["seq"] for l in lines]
            assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
