"""Heuristic augmentation baselines: sparse flow-field warps and color tints.

These are the deliberately weak stand-ins for simulated world changes, used
to train ablation models.  Flow fields are densified with Gaussian RBFs and
applied by backward warping; tints are per-channel affine maps with clamping.
"""

from dataclasses import dataclass, replace

import numpy as np

# Sampling ranges are defined at this reference image width and scaled
# linearly for other resolutions.
REFERENCE_WIDTH = 64
FLOW_POINTS_RANGE = (2, 6)       # K ~ Uniform{2..6}
FLOW_SIGMA_RANGE = (8.0, 24.0)   # px at 64 wide
FLOW_MAG_RANGE = (2.0, 10.0)     # px at 64 wide
TINT_LOG_GAIN_RANGE = (np.log(0.5), np.log(2.0))
TINT_OFFSET_RANGE = (-0.1, 0.1)
GAIN_BOUNDS = (0.25, 4.0)

# Probability that a non-reference view gets its own augmentation, mirroring
# the simulator's per-view inconsistency law.
PER_VIEW_AUGMENT_PROB = 0.75


@dataclass(frozen=True)
class SparseFlowField:
    """K control points with displacements, interpolated by a Gaussian RBF."""

    control_points: np.ndarray  # (K,2) pixel coords (x=col, y=row)
    displacements: np.ndarray   # (K,2) pixel offsets (dx, dy)
    bandwidth: float            # Gaussian sigma in pixels

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=np.float64).reshape(-1, 2)
        d = np.asarray(self.displacements, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "displacements", d)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))
        if cp.shape[0] < 1 or cp.shape != d.shape:
            raise ValueError("need K >= 1 control points with matching displacements")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class Tint:
    """Per-channel multiplicative gains plus additive offsets."""

    gains: np.ndarray   # (3,)
    offset: np.ndarray  # (3,)

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.float64).reshape(3)
        o = np.asarray(self.offset, dtype=np.float64).reshape(3)
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "offset", o)
        if np.any(g < GAIN_BOUNDS[0]) or np.any(g > GAIN_BOUNDS[1]):
            raise ValueError("gains must lie in [%g, %g]" % GAIN_BOUNDS)


IDENTITY_TINT = Tint(gains=np.ones(3), offset=np.zeros(3))


def densify_flow(field: SparseFlowField, resolution) -> np.ndarray:
    """Dense HxWx2 flow from Gaussian-RBF interpolation of the control points."""
    h, w = int(resolution[0]), int(resolution[1])
    cp = field.control_points
    if np.any(cp[:, 0] < 0) or np.any(cp[:, 0] > w - 1) or np.any(cp[:, 1] < 0) or np.any(cp[:, 1] > h - 1):
        raise ValueError("control points must lie inside the image bounds")
    ys, xs = np.mgrid[0:h, 0:w]
    px = xs.astype(np.float64)[..., None]  # (H,W,1)
    py = ys.astype(np.float64)[..., None]
    d2 = (px - cp[:, 0]) ** 2 + (py - cp[:, 1]) ** 2  # (H,W,K)
    weights = np.exp(-d2 / (2.0 * field.bandwidth**2))
    return weights @ field.displacements  # (H,W,2)


def warp(image: np.ndarray, dense_flow: np.ndarray) -> np.ndarray:
    """Backward warp: output(x,y) = image(x + flow_x, y + flow_y), bilinear,
    with out-of-bounds samples clamped to the edge."""
    img = np.asarray(image, dtype=np.float64)
    flow = np.asarray(dense_flow, dtype=np.float64)
    if flow.shape[:2] != img.shape[:2] or flow.shape[2] != 2:
        raise ValueError("flow must be HxWx2 matching the image")
    if not np.all(np.isfinite(flow)):
        raise ValueError("flow must be finite")
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    sx = np.clip(xs + flow[..., 0], 0.0, w - 1.0)
    sy = np.clip(ys + flow[..., 1], 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    out = (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )
    return out


def apply_tint(image: np.ndarray, tint: Tint) -> np.ndarray:
    """clamp(image * gains + offset, 0, 1) per channel."""
    img = np.asarray(image, dtype=np.float64)
    return np.clip(img * tint.gains + tint.offset, 0.0, 1.0)


def sample_flow_field(rng: np.random.Generator, resolution) -> SparseFlowField:
    """Random sparse flow field; sigma and magnitudes scale with image width."""
    h, w = int(resolution[0]), int(resolution[1])
    scale = w / REFERENCE_WIDTH
    k = int(rng.integers(FLOW_POINTS_RANGE[0], FLOW_POINTS_RANGE[1] + 1))
    cp = np.stack(
        [rng.uniform(0, w - 1, size=k), rng.uniform(0, h - 1, size=k)], axis=1
    )
    mag = rng.uniform(*FLOW_MAG_RANGE, size=k) * scale
    theta = rng.uniform(0, 2 * np.pi, size=k)
    disp = np.stack([mag * np.cos(theta), mag * np.sin(theta)], axis=1)
    sigma = rng.uniform(*FLOW_SIGMA_RANGE) * scale
    return SparseFlowField(control_points=cp, displacements=disp, bandwidth=sigma)


def sample_tint(rng: np.random.Generator) -> Tint:
    gains = np.exp(rng.uniform(*TINT_LOG_GAIN_RANGE, size=3))
    offset = rng.uniform(*TINT_OFFSET_RANGE, size=3)
    return Tint(gains=gains, offset=offset)


def _augment_flags(rng: np.random.Generator, n_other: int) -> np.ndarray:
    # At least one augmented view, mirroring the simulator's record invariant.
    while True:
        flags = rng.random(n_other) < PER_VIEW_AUGMENT_PROB
        if flags.any():
            return flags


def make_heuristic_record(record, kind: str, rng: np.random.Generator):
    """Build a fake-inconsistent record from an all-consistent one.

    ``dynamics``: per-view sparse-flow warps of the consistent images.
    ``lighting``: one shared tint on all target images (and the reference
    input), per-view tints on the other inputs.
    View 0 is never altered relative to the targets: it remains the reference
    that defines the target state.  Poses are untouched.
    """
    if any(s != 0 for s in record.states):
        raise ValueError("heuristic augmentation needs an all-consistent record")
    n = len(record.poses)
    resolution = record.consistent[0].shape[:2]
    flags = _augment_flags(rng, n - 1)
    if kind == "dynamics":
        consistent = [img.copy() for img in record.consistent]
        inconsistent = [record.consistent[0].copy()]
        states = [0]
        for i in range(1, n):
            if flags[i - 1]:
                field = sample_flow_field(rng, resolution)
                flow = densify_flow(field, resolution)
                inconsistent.append(warp(record.consistent[i], flow))
                states.append(1)
            else:
                inconsistent.append(record.consistent[i].copy())
                states.append(0)
    elif kind == "lighting":
        shared = sample_tint(rng)
        consistent = [apply_tint(img, shared) for img in record.consistent]
        inconsistent = [consistent[0].copy()]
        states = [0]
        for i in range(1, n):
            if flags[i - 1]:
                own = sample_tint(rng)
                inconsistent.append(apply_tint(record.consistent[i], own))
                states.append(1)
            else:
                inconsistent.append(consistent[i].copy())
                states.append(0)
    else:
        raise ValueError("kind must be 'dynamics' or 'lighting', got %r" % kind)
    return replace(
        record,
        consistent=consistent,
        inconsistent=inconsistent,
        states=states,
        kind=kind,
    )
