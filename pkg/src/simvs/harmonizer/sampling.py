"""Ancestral sampling from the trained denoiser (x0-prediction posterior)."""

import numpy as np

from .batch import HarmonizationBatch, assemble_inputs
from .codec import LatentCodec
from .schedule import DEFAULT_SAMPLING_STEPS, DiffusionSchedule


def _posterior_step(z, x0_hat, schedule, t, s, noise):
    """One ancestral step from timestep t down to s < t given the x0 estimate."""
    abar_t = schedule.alpha[t] ** 2
    abar_s = schedule.alpha[s] ** 2
    ratio = abar_t / abar_s
    beta = 1.0 - ratio
    denom = 1.0 - abar_t
    mean = (np.sqrt(abar_s) * beta / denom) * x0_hat + (
        np.sqrt(ratio) * (1.0 - abar_s) / denom
    ) * z
    var = beta * (1.0 - abar_s) / denom
    return mean + np.sqrt(max(var, 0.0)) * noise


def sample_latents(model, schedule: DiffusionSchedule, batch: HarmonizationBatch,
                   rng: np.random.Generator,
                   n_steps: int = DEFAULT_SAMPLING_STEPS) -> np.ndarray:
    """Iterate the sampler over the 7 target slots; returns (7,C,h,w) latents."""
    shape = (7, *batch.latent_shape)
    ts = schedule.sampling_timesteps(n_steps)
    z = rng.standard_normal(shape)
    for i, t in enumerate(ts):
        x = assemble_inputs(batch, z)
        out = model.forward(x, np.array([t]))
        x0_hat = np.asarray(out[1:], dtype=np.float64)
        if i + 1 == len(ts):
            return x0_hat
        z = _posterior_step(z, x0_hat, schedule, int(t), int(ts[i + 1]),
                            rng.standard_normal(shape))
    return x0_hat


def sample(model, schedule: DiffusionSchedule, batch: HarmonizationBatch,
           rng: np.random.Generator, codec: LatentCodec = LatentCodec(),
           n_steps: int = DEFAULT_SAMPLING_STEPS) -> list:
    """Sampled images for the 7 non-reference slots, decoded to [0,1]."""
    latents = sample_latents(model, schedule, batch, rng, n_steps=n_steps)
    return [codec.decode(latents[i]) for i in range(7)]
