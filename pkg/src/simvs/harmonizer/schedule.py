"""Variance-preserving diffusion schedule tables.

``alpha[t]`` is the cumulative signal scale and ``sigma[t]`` the noise scale
of the forward process z_t = alpha[t] * z + sigma[t] * eps, with
alpha^2 + sigma^2 = 1 everywhere.  ``weight[t]`` multiplies the per-step
training loss (uniform by default; kept as a knob).
"""

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TIMESTEPS = 256
DEFAULT_SAMPLING_STEPS = 64
_COSINE_OFFSET = 0.008


@dataclass(frozen=True)
class DiffusionSchedule:
    timesteps: int
    alpha: np.ndarray   # (T,) decreasing signal scale, alpha[0] >= 0.999
    sigma: np.ndarray   # (T,) increasing noise scale, sigma[-1] >= 0.999
    weight: np.ndarray  # (T,) loss weights

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64)
        s = np.asarray(self.sigma, dtype=np.float64)
        w = np.asarray(self.weight, dtype=np.float64)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "weight", w)
        if not (len(a) == len(s) == len(w) == self.timesteps):
            raise ValueError("schedule tables must have length timesteps")
        if np.any(np.diff(a) > 0) or np.any(np.diff(s) < 0):
            raise ValueError("alpha must decrease and sigma increase")
        if np.max(np.abs(a**2 + s**2 - 1.0)) > 1e-6:
            raise ValueError("schedule is not variance preserving")
        if a[0] < 0.999 or s[-1] < 0.999:
            raise ValueError("schedule endpoints out of spec")

    def sampling_timesteps(self, n_steps: int) -> np.ndarray:
        """Descending subsequence of timesteps used for ancestral sampling."""
        if not 1 <= n_steps <= self.timesteps:
            raise ValueError("n_steps must lie in [1, timesteps]")
        ts = np.unique(np.round(np.linspace(0, self.timesteps - 1, n_steps)).astype(int))
        return ts[::-1]


def cosine_schedule(timesteps: int = DEFAULT_TIMESTEPS,
                    weighting: str = "uniform") -> DiffusionSchedule:
    """Cosine signal schedule with a small offset keeping alpha[0] near 1."""
    t = np.arange(timesteps, dtype=np.float64)
    u = t / (timesteps - 1)
    s = _COSINE_OFFSET
    alpha = np.cos((u + s) / (1.0 + s) * math.pi / 2.0)
    alpha = np.clip(alpha, 0.0, 1.0)
    sigma = np.sqrt(1.0 - alpha**2)
    if weighting == "uniform":
        weight = np.ones(timesteps)
    else:
        raise ValueError("unknown weighting %r" % weighting)
    return DiffusionSchedule(timesteps=timesteps, alpha=alpha, sigma=sigma, weight=weight)
