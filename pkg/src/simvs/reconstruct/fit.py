"""Photometric voxel-field fitting with a total-variation density prior."""

from dataclasses import dataclass

import numpy as np

from ..camera import pixel_directions
from ..errors import TrainingDivergedError
from ..seeding import rng_for
from .volume import far_sentinel, render_rays, render_rays_backward
from .voxel import DEFAULT_BOUNDS, VoxelRadianceField

_DIVERGENCE_FACTOR = 10.0
_DIVERGENCE_PATIENCE = 100
_WARMUP = 10


@dataclass(frozen=True)
class FitConfig:
    grid_size: int = 64
    iters: int = 600
    ray_batch: int = 4096
    learning_rate: float = 0.15
    tv_weight: float = 5e-4
    n_samples: int = 128
    seed: int = 0
    bounds: tuple = DEFAULT_BOUNDS


def _tv_grad(density: np.ndarray, weight: float):
    """Mean squared forward-difference TV; returns (loss, grad)."""
    loss = 0.0
    grad = np.zeros_like(density)
    n = density.size
    for ax in range(3):
        d = np.diff(density, axis=ax)
        loss += float(np.sum(d * d)) / n
        pad = [(0, 0)] * 3
        pad[ax] = (1, 0)
        dpad_hi = np.pad(d, pad)
        pad[ax] = (0, 1)
        dpad_lo = np.pad(d, pad)
        grad += 2.0 * (dpad_hi - dpad_lo) / n
    return weight * loss, weight * grad


class _GridAdam:
    def __init__(self, shapes, lr):
        self.lr = lr
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, values, grads):
        self.t += 1
        b1c = 1.0 - 0.9**self.t
        b2c = 1.0 - 0.999**self.t
        for val, g, m, v in zip(values, grads, self.m, self.v):
            m += 0.1 * (g - m)
            v += 0.001 * (g * g - v)
            val -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + 1e-8)


def build_ray_pool(images, poses):
    """Flatten all pixels of all posed images into (origins, dirs, colors)."""
    origins = []
    dirs = []
    colors = []
    for img, pose in zip(images, poses):
        d = pixel_directions(pose).reshape(-1, 3)
        dirs.append(d)
        origins.append(np.broadcast_to(pose.center(), d.shape).copy())
        colors.append(np.asarray(img, dtype=np.float64).reshape(-1, 3))
    return np.concatenate(origins), np.concatenate(dirs), np.concatenate(colors)


def fit_field(images, poses, config: FitConfig = FitConfig()):
    """Fit density/color grids to posed images; returns (field, loss curve).

    Projected Adam keeps densities non-negative and colors in [0,1]; the
    background color is a learnable constant.  Divergence (loss above 10x
    the warmup mean for 100 consecutive iterations) aborts with diagnostics.
    """
    if len(images) < 8:
        raise ValueError("fit_field needs at least 8 posed views")
    field = VoxelRadianceField.empty(config.grid_size, bounds=config.bounds)
    origins, dirs, colors = build_ray_pool(images, poses)
    n_rays = origins.shape[0]
    rng = rng_for(config.seed, "fit/rays")
    far = far_sentinel(field, origins[0])

    opt = _GridAdam(
        [field.density.shape, field.color.shape, field.background.shape],
        config.learning_rate,
    )
    grad_density = np.zeros_like(field.density)
    grad_color = np.zeros_like(field.color)
    grad_bg = np.zeros_like(field.background)
    curve = []
    baseline = None
    over = 0
    order = rng.permutation(n_rays)
    cursor = 0

    for it in range(config.iters):
        if cursor + config.ray_batch > n_rays:
            order = rng.permutation(n_rays)
            cursor = 0
        idx = order[cursor : cursor + config.ray_batch]
        cursor += config.ray_batch
        ro, rd, target = origins[idx], dirs[idx], colors[idx]

        rgb, _, _ = render_rays(field, ro, rd, n_samples=config.n_samples, far=far)
        err = rgb - target
        loss = float(np.mean(err**2))
        drgb = 2.0 * err / err.size

        grad_density[...] = 0.0
        grad_color[...] = 0.0
        grad_bg[...] = 0.0
        render_rays_backward(field, ro, rd, drgb, grad_density, grad_color,
                             grad_bg, n_samples=config.n_samples, far=far)
        tv_loss, tv_g = _tv_grad(field.density, config.tv_weight)
        grad_density += tv_g
        loss += tv_loss

        opt.step(
            [field.density, field.color, field.background],
            [grad_density, grad_color, grad_bg],
        )
        np.maximum(field.density, 0.0, out=field.density)
        np.clip(field.color, 0.0, 1.0, out=field.color)
        np.clip(field.background, 0.0, 1.0, out=field.background)

        curve.append(loss)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                "non-finite loss in field fitting", diagnostics={"iter": it}
            )
        if baseline is None:
            if len(curve) >= _WARMUP:
                baseline = float(np.mean(curve[:_WARMUP]))
        else:
            over = over + 1 if loss > _DIVERGENCE_FACTOR * baseline else 0
            if over >= _DIVERGENCE_PATIENCE:
                raise TrainingDivergedError(
                    "field fitting loss diverged",
                    diagnostics={"iter": it, "loss": loss, "baseline": baseline},
                )
    return field, curve
