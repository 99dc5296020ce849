"""The two HTTP endpoints: POST /segment (wire protocol) and
POST /auto_prompts (grid selection + per-grid heatmaps)."""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from smartscan_sidecar.codecs import DecodeError, decode_rgb, encode_heatmap, encode_mask
from smartscan_sidecar.config import SidecarConfig
from smartscan_sidecar.models import load_prompt_models, load_segmenter

CELL = 256


class SegmentBody(BaseModel):
    crop_png_b64: str
    box: list[float] = Field(min_length=4, max_length=4)
    points: list[list[float]] = Field(default_factory=list)


class AutoPromptBody(BaseModel):
    image_png_b64: str


def create_app(config: SidecarConfig | None = None, *, segmenter=None,
               prompt_models=None) -> FastAPI:
    config = config or SidecarConfig()
    app = FastAPI(title="smartscan-sidecar", version="0.1.0")
    if segmenter is None:
        segmenter = load_segmenter(config.segment_model, config.device)
    if prompt_models is None:
        prompt_models = load_prompt_models(
            config.box_classifier, config.heatmap_autoencoder, config.device
        )
    fixture_reply = None
    if config.auto_prompt_fixture:
        fixture_reply = json.loads(Path(config.auto_prompt_fixture).read_text())

    @app.post("/segment")
    def segment(body: SegmentBody):
        if segmenter is None:
            raise HTTPException(503, "no segmentation model loaded")
        try:
            crop = decode_rgb(body.crop_png_b64)
        except DecodeError as exc:
            raise HTTPException(422, str(exc))
        if crop.shape != (CELL, CELL, 3):
            raise HTTPException(422, f"crop must be {CELL}x{CELL}x3, got {crop.shape}")
        x0, y0, x1, y1 = body.box
        if not (0 <= x0 < x1 <= CELL and 0 <= y0 < y1 <= CELL):
            raise HTTPException(422, f"box {body.box} outside crop")
        for p in body.points:
            if len(p) != 2 or not (x0 <= p[0] < x1 and y0 <= p[1] < y1):
                raise HTTPException(422, f"point {p} outside box {body.box}")
        try:
            mask = segmenter.segment(crop, (x0, y0, x1, y1), [tuple(p) for p in body.points])
        except Exception as exc:  # surfaced as a model error, not a crash
            raise HTTPException(500, f"model failure: {exc}")
        return {"mask_png_b64": encode_mask(mask)}

    @app.post("/auto_prompts")
    def auto_prompts(body: AutoPromptBody):
        if fixture_reply is not None:
            return _clamped_fixture(fixture_reply)
        if prompt_models is None:
            raise HTTPException(
                503, "prompt generator checkpoints not configured; set box_classifier "
                     "and heatmap_autoencoder (or auto_prompt_fixture) in the config"
            )
        try:
            image = decode_rgb(body.image_png_b64)
        except DecodeError as exc:
            raise HTTPException(422, str(exc))
        result = prompt_models.auto_prompts(image)
        return {
            "selected_grids": result["selected_grids"],
            "heatmaps": [
                {
                    "row": h["row"], "col": h["col"], "sigma": h["sigma"],
                    "heatmap_png_b64": encode_heatmap(h["values"]),
                }
                for h in result["heatmaps"]
            ],
        }

    return app


def _clamped_fixture(reply: dict) -> dict:
    """Fixture heatmaps pass through verbatim; raw float payloads (values
    lists) are clamped and encoded on the way out."""
    out = {"selected_grids": reply.get("selected_grids", []), "heatmaps": []}
    import numpy as np

    for h in reply.get("heatmaps", []):
        if "heatmap_png_b64" in h:
            out["heatmaps"].append(h)
        else:
            out["heatmaps"].append({
                "row": h["row"], "col": h["col"], "sigma": h.get("sigma", 8.0),
                "heatmap_png_b64": encode_heatmap(np.asarray(h["values"], dtype=np.float64)),
            })
    return out
