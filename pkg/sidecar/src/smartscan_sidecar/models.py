"""Model adapters.

The segmenter contract: TorchScript module called as
``module(crop, box, points) -> (masks, scores)`` with crop float32
(1, 3, 256, 256) in [0, 1], box float32 (1, 4), points float32 (1, K, 2);
masks (1, M, 256, 256) logits or probabilities and scores (1, M). The
endpoint thresholds the highest-scoring mask at 0.5.

The prompt networks: box classifier (1, 3, 256, 256) -> (1,) or (1, 1)
of-interest probability; heatmap autoencoder (1, 3, 256, 256) ->
(1, 1, 256, 256) values which are clamped to [0, 1].
"""

from __future__ import annotations

import numpy as np

GRID = 12
CELL = 256


class EchoSegmenter:
    """Model-free fixture: the mask is the crop's red channel >= 128, so a
    client can round-trip arbitrary masks through the protocol."""

    def segment(self, crop: np.ndarray, box, points) -> np.ndarray:
        return (crop[:, :, 0] >= 128).astype(np.uint8)


class TorchScriptSegmenter:
    def __init__(self, path: str, device: str = "cpu"):
        import torch

        self._torch = torch
        self.device = device
        self.module = torch.jit.load(path, map_location=device).eval()

    def segment(self, crop: np.ndarray, box, points) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            t_crop = torch.from_numpy(crop.astype(np.float32) / 255.0).permute(2, 0, 1)[None]
            t_box = torch.tensor([list(box)], dtype=torch.float32)
            t_points = torch.tensor([list(map(list, points)) or [[0.0, 0.0]]], dtype=torch.float32)
            masks, scores = self.module(
                t_crop.to(self.device), t_box.to(self.device), t_points.to(self.device)
            )
            best = int(scores[0].argmax())
            mask = masks[0, best].detach().cpu().numpy()
        return (mask >= 0.5).astype(np.uint8)


def load_segmenter(spec: str | None, device: str = "cpu"):
    if spec is None:
        return None
    if spec == "echo":
        return EchoSegmenter()
    return TorchScriptSegmenter(spec, device)


class TorchScriptPromptModels:
    """Box classifier + heatmap autoencoder over the 12x12 grid."""

    def __init__(self, classifier_path: str, autoencoder_path: str, device: str = "cpu"):
        import torch

        self._torch = torch
        self.device = device
        self.classifier = torch.jit.load(classifier_path, map_location=device).eval()
        self.autoencoder = torch.jit.load(autoencoder_path, map_location=device).eval()

    def auto_prompts(self, image: np.ndarray, sigma: float = 8.0) -> dict:
        torch = self._torch
        selected = []
        heatmaps = []
        with torch.no_grad():
            for row in range(GRID):
                for col in range(GRID):
                    cell = image[row * CELL:(row + 1) * CELL, col * CELL:(col + 1) * CELL]
                    t = torch.from_numpy(cell.astype(np.float32) / 255.0).permute(2, 0, 1)[None]
                    t = t.to(self.device)
                    score = float(self.classifier(t).reshape(-1)[0])
                    if score < 0.5:
                        continue
                    heat = self.autoencoder(t).reshape(CELL, CELL).detach().cpu().numpy()
                    selected.append({"row": row, "col": col})
                    heatmaps.append({
                        "row": row, "col": col, "sigma": sigma,
                        "values": np.clip(heat, 0.0, 1.0),
                    })
        return {"selected_grids": selected, "heatmaps": heatmaps}


def load_prompt_models(classifier: str | None, autoencoder: str | None, device: str = "cpu"):
    if not classifier or not autoencoder:
        return None
    return TorchScriptPromptModels(classifier, autoencoder, device)
