"""Sidecar configuration, loaded from one JSON file.

``segment_model``: path to a TorchScript promptable-segmentation module, or
the literal string "echo" for the model-free fixture. The /segment endpoint
exists only when one of these is configured.

``box_classifier`` / ``heatmap_autoencoder``: TorchScript checkpoints for
the two grid prompt networks; both must be set for model-backed
/auto_prompts. ``auto_prompt_fixture``: JSON file whose contents are served
verbatim instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class SidecarConfig:
    segment_model: str | None = None  # "echo" or a TorchScript path
    box_classifier: str | None = None
    heatmap_autoencoder: str | None = None
    auto_prompt_fixture: str | None = None
    device: str = "cpu"
    port: int = 8009

    @property
    def auto_prompts_available(self) -> bool:
        if self.auto_prompt_fixture:
            return True
        return bool(self.box_classifier and self.heatmap_autoencoder)


def load_config(path: str | Path | None = None) -> SidecarConfig:
    if path is None:
        return SidecarConfig()
    doc = json.loads(Path(path).read_text())
    return SidecarConfig(
        segment_model=doc.get("segment_model"),
        box_classifier=doc.get("box_classifier"),
        heatmap_autoencoder=doc.get("heatmap_autoencoder"),
        auto_prompt_fixture=doc.get("auto_prompt_fixture"),
        device=doc.get("device", "cpu"),
        port=int(doc.get("port", 8009)),
    )
