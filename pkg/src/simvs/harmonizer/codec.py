"""Fixed pixel-space latent codec (channels-last).

Factor 1 is a pure value-range map: latent = 2*image - 1.  Factor 2
additionally average-pools 2x2 on encode and upsamples bilinearly on
decode, exercising the same encode/concatenate plumbing a learned latent
codec would use.
"""

from dataclasses import dataclass

import numpy as np


def _avg_pool2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    return x.reshape(h // 2, 2, w // 2, 2, c).mean(axis=(1, 3))


def _bilinear_up2(x: np.ndarray) -> np.ndarray:
    """2x bilinear upsampling with half-pixel alignment (constants exact)."""
    h, w, c = x.shape
    out_y = (np.arange(2 * h) + 0.5) / 2.0 - 0.5
    out_x = (np.arange(2 * w) + 0.5) / 2.0 - 0.5
    y0 = np.clip(np.floor(out_y).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(out_x).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    fy = np.clip(out_y - y0, 0.0, 1.0)[:, None, None]
    fx = np.clip(out_x - x0, 0.0, 1.0)[None, :, None]
    top = x[y0][:, x0] * (1 - fx) + x[y0][:, x1] * fx
    bot = x[y1][:, x0] * (1 - fx) + x[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


@dataclass(frozen=True)
class LatentCodec:
    """Image [0,1] HxWx3  <->  latent [-1,1] (H/f, W/f, 3)."""

    factor: int = 1
    channels: int = 3

    def __post_init__(self):
        if self.factor not in (1, 2):
            raise ValueError("codec factor must be 1 or 2")

    def encode(self, image: np.ndarray) -> np.ndarray:
        img = np.asarray(image, dtype=np.float64)
        if img.ndim != 3 or img.shape[2] != self.channels:
            raise ValueError("expected HxWx%d image" % self.channels)
        z = img * 2.0 - 1.0
        if self.factor == 2:
            z = _avg_pool2(z)
        return z

    def decode(self, latent: np.ndarray) -> np.ndarray:
        z = np.asarray(latent, dtype=np.float64)
        if self.factor == 2:
            z = _bilinear_up2(z)
        return np.clip((z + 1.0) / 2.0, 0.0, 1.0)

    def latent_shape(self, resolution) -> tuple:
        h, w = resolution
        if h % self.factor or w % self.factor:
            raise ValueError("resolution must be divisible by the codec factor")
        return (h // self.factor, w // self.factor, self.channels)
