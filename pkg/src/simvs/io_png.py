"""Lossless PNG I/O for images and depth maps.

Color images are 8-bit RGB; values round-trip as ``round(x * 255) / 255``.
Depth maps are 16-bit grayscale with an explicit scale written to a JSON
sidecar: ``depth = png_value / 65535 * scale``.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image


def write_rgb8(path, image: np.ndarray) -> None:
    """Write an HxWx3 float image in [0,1] as 8-bit RGB PNG."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected HxWx3 image, got shape %r" % (arr.shape,))
    q = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(q, mode="RGB").save(str(path), format="PNG")


def read_rgb8(path) -> np.ndarray:
    """Read an RGB PNG as HxWx3 float32 in [0,1]."""
    with Image.open(str(path)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def write_depth16(path, depth: np.ndarray, scale: float) -> None:
    """Write a depth map as 16-bit PNG plus a `.json` sidecar with the scale."""
    arr = np.asarray(depth, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected HxW depth map, got shape %r" % (arr.shape,))
    if scale <= 0:
        raise ValueError("scale must be positive")
    q = np.clip(np.round(arr / scale * 65535.0), 0, 65535).astype(np.uint16)
    Image.fromarray(q, mode="I;16").save(str(path), format="PNG")
    sidecar = {"scale": float(scale), "encoding": "depth = value / 65535 * scale"}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True))


def read_depth16(path) -> np.ndarray:
    """Read a 16-bit depth PNG written by write_depth16 (uses the sidecar scale)."""
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    with Image.open(str(path)) as im:
        q = np.asarray(im, dtype=np.float64)
    return (q / 65535.0 * float(sidecar["scale"])).astype(np.float32)
