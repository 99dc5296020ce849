"""Base64 PNG codecs for the wire protocol."""

from __future__ import annotations

import base64
import binascii
import io

import numpy as np
from PIL import Image


class DecodeError(ValueError):
    pass


def decode_rgb(data: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
        img = Image.open(io.BytesIO(raw)).convert("RGB")
    except (binascii.Error, OSError, ValueError) as exc:
        raise DecodeError(f"not a base64 PNG image: {exc}") from exc
    return np.asarray(img, dtype=np.uint8)


def encode_mask(mask: np.ndarray) -> str:
    img = Image.fromarray((np.asarray(mask) != 0).astype(np.uint8) * 255, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def encode_heatmap(values: np.ndarray) -> str:
    clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    img = Image.fromarray(np.round(clipped * 255).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
