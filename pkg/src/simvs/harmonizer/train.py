"""Training loop: x0-prediction diffusion loss, Adam, divergence guard.

The loss regresses the model output directly onto the clean target latents:

    w(t) * || f(alpha_t z + sigma_t eps; conditioning) - z ||^2

with one shared timestep per record and the conditioning count n drawn
uniformly from {1..7} per record.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import TrainingDivergedError
from ..seeding import rng_for
from .batch import assemble_inputs, pack_batch
from .checkpoint import save_denoiser
from .codec import LatentCodec
from .model import DenoiserModel
from .schedule import DiffusionSchedule

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 100
_WARMUP = 10


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    batch_records: int = 8
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    snapshot_every: int = 250


def sample_conditioning_count(rng: np.random.Generator) -> int:
    """Uniform dropout of the conditioning count over {1..7}."""
    return int(rng.integers(1, 8))


class Adam:
    def __init__(self, named_params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = [p for _, p in named_params]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p.value -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _forward_batched(model, batches, ts, noisy, with_grad):
    """Shared forward (and optional backward) over a list of record batches."""
    b = len(batches)
    xs = np.concatenate(
        [assemble_inputs(batch, noisy[i]) for i, batch in enumerate(batches)]
    )
    out = model.forward(xs, np.asarray(ts))
    c, h, w = batches[0].latent_shape
    preds = out.reshape(b, 8, c, h, w)[:, 1:]
    return preds, out.shape


def training_loss(model, batch, t: int, eps: np.ndarray,
                  schedule: DiffusionSchedule) -> float:
    """Diffusion loss of one record at one timestep (no gradient accumulation)."""
    z = batch.target_latents
    if eps.shape != z.shape:
        raise ValueError("noise must match the target latent shape")
    z_t = schedule.alpha[t] * z + schedule.sigma[t] * eps
    preds, _ = _forward_batched(model, [batch], [t], z_t[None], with_grad=False)
    loss = float(schedule.weight[t] * np.mean((preds[0] - z) ** 2))
    if not np.isfinite(loss):
        raise TrainingDivergedError(
            "non-finite loss in forward pass",
            diagnostics={"t": int(t), "loss": loss},
        )
    return loss


def training_loss_and_grads(model, batches, ts, epss, schedule) -> float:
    """Batched loss with gradients accumulated into the model parameters."""
    b = len(batches)
    z = np.stack([batch.target_latents for batch in batches])  # (B,7,C,h,w)
    alpha = schedule.alpha[np.asarray(ts)][:, None, None, None, None]
    sigma = schedule.sigma[np.asarray(ts)][:, None, None, None, None]
    z_t = alpha * z + sigma * np.asarray(epss)
    preds, out_shape = _forward_batched(model, batches, ts, z_t, with_grad=True)
    weights = schedule.weight[np.asarray(ts)]
    err = preds - z
    per_record = np.mean(err.reshape(b, -1) ** 2, axis=1)
    loss = float(np.mean(weights * per_record))
    if not np.isfinite(loss):
        raise TrainingDivergedError(
            "non-finite loss in forward pass",
            diagnostics={"ts": [int(t) for t in ts], "loss": loss},
        )
    dpred = (2.0 / err[0].size / b) * weights[:, None, None, None, None] * err
    dout = np.zeros(out_shape, dtype=model.config.np_dtype())
    c, h, w = batches[0].latent_shape
    dout = dout.reshape(b, 8, c, h, w)
    dout[:, 1:] = dpred
    model.backward(dout.reshape(out_shape))
    return loss


def _val_loss(model, val_batches, schedule):
    if not val_batches:
        return None
    losses = [training_loss(model, batch, t, eps, schedule)
              for batch, t, eps in val_batches]
    return float(np.mean(losses))


def train(model: DenoiserModel, records, config: TrainConfig,
          schedule: DiffusionSchedule, codec: LatentCodec,
          run_dir=None, val_records=()):
    """Train on in-memory records; returns (model, loss curve dict).

    Deterministic given (records, config): all randomness flows from named
    substreams of ``config.seed``.  Divergence (loss above 10x the warmup
    mean for 100 consecutive steps, or non-finite) aborts with diagnostics.
    """
    if len(records) < config.batch_records:
        raise ValueError("need at least batch_records records")
    rng_batch = rng_for(config.seed, "train/batch")
    rng_views = rng_for(config.seed, "train/views")
    rng_drop = rng_for(config.seed, "train/dropout")
    rng_t = rng_for(config.seed, "train/t")
    rng_noise = rng_for(config.seed, "train/noise")
    rng_val = rng_for(config.seed, "train/val")

    optimizer = Adam(model.named_params(), lr=config.learning_rate,
                     beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)

    # Fixed validation tuples so snapshot losses are comparable across steps.
    val_batches = []
    for i, rec in enumerate(val_records[:4]):
        n = sample_conditioning_count(rng_val)
        batch = pack_batch(rec, n, rng_val, codec=codec)
        t = int(rng_val.integers(0, schedule.timesteps))
        eps = rng_val.standard_normal(batch.target_latents.shape)
        val_batches.append((batch, t, eps))

    curve = {"step": [], "loss": [], "val_step": [], "val_loss": []}
    warmup_losses = []
    baseline = None
    over_budget = 0

    ckpt_dir = None
    if run_dir is not None:
        ckpt_dir = Path(run_dir) / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    for step in range(config.steps):
        idx = rng_batch.choice(len(records), size=config.batch_records, replace=False)
        batches = []
        ts = []
        epss = []
        for i in idx:
            n = sample_conditioning_count(rng_drop)
            batch = pack_batch(records[i], n, rng_views, codec=codec)
            batches.append(batch)
            ts.append(int(rng_t.integers(0, schedule.timesteps)))
            epss.append(rng_noise.standard_normal(batch.target_latents.shape))
        model.zero_grad()
        loss = training_loss_and_grads(model, batches, ts, np.stack(epss), schedule)
        optimizer.step()

        curve["step"].append(step)
        curve["loss"].append(loss)
        if baseline is None:
            warmup_losses.append(loss)
            if len(warmup_losses) >= _WARMUP:
                baseline = float(np.mean(warmup_losses))
        else:
            over_budget = over_budget + 1 if loss > DIVERGENCE_FACTOR * baseline else 0
            if over_budget >= DIVERGENCE_PATIENCE:
                raise TrainingDivergedError(
                    "loss above %gx the warmup mean for %d consecutive steps"
                    % (DIVERGENCE_FACTOR, DIVERGENCE_PATIENCE),
                    diagnostics={"step": step, "loss": loss, "baseline": baseline},
                )

        if (step + 1) % config.snapshot_every == 0 or step + 1 == config.steps:
            vl = _val_loss(model, val_batches, schedule)
            if vl is not None:
                curve["val_step"].append(step)
                curve["val_loss"].append(vl)
            if ckpt_dir is not None:
                save_denoiser(ckpt_dir / "ckpt_latest.npz", model, schedule, codec)

    if ckpt_dir is not None:
        save_denoiser(ckpt_dir / "ckpt_final.npz", model, schedule, codec)
        (Path(run_dir) / "loss_curve.json").write_text(
            json.dumps(curve, sort_keys=True) + "\n"
        )
    return model, curve
