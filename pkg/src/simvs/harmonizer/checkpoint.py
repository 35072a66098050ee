"""Single-file checkpoint containers (.npz) for models and voxel fields.

Layout: ``__version__`` (mandatory), ``__kind__``, ``__arch__`` (JSON string
of hyperparameters / schedule metadata), plus flat named arrays.  Model
parameters live under ``param/<name>`` keys.
"""

import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointNotFoundError
from .codec import LatentCodec
from .model import DenoiserModel, ModelConfig
from .schedule import DiffusionSchedule

CHECKPOINT_VERSION = 1


def save_container(path, kind: str, arch: dict, arrays: dict) -> None:
    payload = {
        "__version__": np.array([CHECKPOINT_VERSION], dtype=np.int64),
        "__kind__": np.array(kind),
        "__arch__": np.array(json.dumps(arch, sort_keys=True)),
    }
    for key, arr in arrays.items():
        if key in payload:
            raise ValueError("reserved key %s" % key)
        payload[key] = arr
    np.savez(path, **payload)


def load_container(path):
    path = Path(path)
    if not path.is_file():
        raise CheckpointNotFoundError("no checkpoint at %s" % path)
    with np.load(path, allow_pickle=False) as data:
        if "__version__" not in data:
            raise CheckpointNotFoundError("checkpoint missing mandatory version field")
        version = int(data["__version__"][0])
        if version != CHECKPOINT_VERSION:
            raise CheckpointNotFoundError("unsupported checkpoint version %d" % version)
        kind = str(data["__kind__"][()])
        arch = json.loads(str(data["__arch__"][()]))
        arrays = {k: data[k] for k in data.files if not k.startswith("__")}
    return kind, arch, arrays


def save_denoiser(path, model: DenoiserModel, schedule: DiffusionSchedule,
                  codec: LatentCodec) -> None:
    arch = {
        "model": model.config.to_json_dict(),
        "codec": {"factor": codec.factor, "channels": codec.channels},
        "timesteps": schedule.timesteps,
    }
    arrays = {
        "schedule/alpha": schedule.alpha,
        "schedule/sigma": schedule.sigma,
        "schedule/weight": schedule.weight,
    }
    arrays.update(model.state_arrays())
    save_container(path, "denoiser", arch, arrays)


def load_denoiser(path):
    kind, arch, arrays = load_container(path)
    if kind != "denoiser":
        raise CheckpointNotFoundError("expected a denoiser checkpoint, got %r" % kind)
    config = ModelConfig(**arch["model"])
    model = DenoiserModel(config, seed=0)
    model.load_state_arrays(arrays)
    schedule = DiffusionSchedule(
        timesteps=arch["timesteps"],
        alpha=arrays["schedule/alpha"],
        sigma=arrays["schedule/sigma"],
        weight=arrays["schedule/weight"],
    )
    codec = LatentCodec(**arch["codec"])
    return model, schedule, codec
