"""Image quality metrics and the report container used by the eval protocols."""

import json
from dataclasses import dataclass, field

import numpy as np

PSNR_CAP_DB = 99.0

# Rec. 709 luma weights for grayscale conversion.
_LUMA = np.array([0.2126, 0.7152, 0.0722])

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("shape mismatch: %r vs %r" % (a.shape, b.shape))
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB for images in [0,1]; identical images report the 99 dB cap."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, float(10.0 * np.log10(1.0 / err)))


def to_gray(image: np.ndarray) -> np.ndarray:
    """Luma grayscale for HxWx3 input; HxW input passes through."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr @ _LUMA
    raise ValueError("expected HxW or HxWx3 image, got %r" % (arr.shape,))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    radius = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - radius
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _windowed_mean(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    # Valid-mode weighted means over all window positions.
    k = window.shape[0]
    view = np.lib.stride_tricks.sliding_window_view(x, (k, k))
    return np.tensordot(view, window, axes=([2, 3], [0, 1]))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Inputs are converted to luma grayscale; the dynamic range is taken as 1.
    Raises if the image is smaller than the window.
    """
    ga = to_gray(a)
    gb = to_gray(b)
    if ga.shape != gb.shape:
        raise ValueError("shape mismatch: %r vs %r" % (ga.shape, gb.shape))
    if min(ga.shape) < SSIM_WINDOW:
        raise ValueError(
            "image %r smaller than the %dx%d SSIM window"
            % (ga.shape, SSIM_WINDOW, SSIM_WINDOW)
        )
    w = gaussian_window()
    mu_a = _windowed_mean(ga, w)
    mu_b = _windowed_mean(gb, w)
    var_a = _windowed_mean(ga * ga, w) - mu_a**2
    var_b = _windowed_mean(gb * gb, w) - mu_b**2
    cov = _windowed_mean(ga * gb, w) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a**2 + mu_b**2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


@dataclass
class MetricsReport:
    """Per-view metric values plus their means for one (method, protocol) pair.

    ``per_view`` holds one entry per scored view across all evaluated records;
    ``records`` holds per-record means for paired statistical tests.
    """

    method: str
    protocol: str
    psnr_per_view: list
    ssim_per_view: list
    lpips_per_view: list | None = None
    records: list = field(default_factory=list)  # [{"record": id, "psnr":, "ssim":}]

    @property
    def psnr_mean(self) -> float:
        return float(np.mean(self.psnr_per_view))

    @property
    def ssim_mean(self) -> float:
        return float(np.mean(self.ssim_per_view))

    @property
    def lpips_mean(self):
        if not self.lpips_per_view:
            return None
        return float(np.mean(self.lpips_per_view))

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "protocol": self.protocol,
            "psnr": {"per_view": self.psnr_per_view, "mean": self.psnr_mean},
            "ssim": {"per_view": self.ssim_per_view, "mean": self.ssim_mean},
            "lpips": (
                None
                if self.lpips_per_view is None
                else {"per_view": self.lpips_per_view, "mean": self.lpips_mean}
            ),
            "records": self.records,
        }


def render_markdown_table(reports: list) -> str:
    """Markdown results table, columns ordered PSNR up, SSIM up, LPIPS down."""
    lines = [
        "| Method | PSNR↑ | SSIM↑ | LPIPS↓ |",
        "| --- | --- | --- | --- |",
    ]
    for r in reports:
        lp = r.lpips_mean
        lines.append(
            "| %s | %.2f | %.3f | %s |"
            % (r.method, r.psnr_mean, r.ssim_mean, "-" if lp is None else "%.3f" % lp)
        )
    return "\n".join(lines) + "\n"


def dump_reports_json(reports: list) -> str:
    payload = {"reports": [r.to_json_dict() for r in reports]}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
