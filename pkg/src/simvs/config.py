"""Experiment configuration: a single JSON file, strictly validated.

Unknown keys are rejected everywhere; validation reports every violation at
once.  Each command persists the fully resolved config (defaults applied)
plus a code-version stamp into its run directory.
"""

import json
from pathlib import Path

from .errors import ConfigValidationError, SimvsError


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool))


class Field:
    def __init__(self, check, describe, default=None, required=False):
        self.check = check
        self.describe = describe
        self.default = default
        self.required = required


def _int_range(lo=None, hi=None):
    def check(v):
        if not _is_int(v):
            return False
        if lo is not None and v < lo:
            return False
        if hi is not None and v > hi:
            return False
        return True
    desc = "integer"
    if lo is not None or hi is not None:
        desc += " in [%s, %s]" % (lo if lo is not None else "-inf",
                                  hi if hi is not None else "inf")
    return check, desc


def _num_range(lo=None, hi=None):
    def check(v):
        if not _is_num(v):
            return False
        if lo is not None and v < lo:
            return False
        if hi is not None and v > hi:
            return False
        return True
    return check, "number" + ("" if lo is None and hi is None else " in range")


def _choice(*options):
    return (lambda v: v in options), "one of %s" % (sorted(options),)


def _string():
    return (lambda v: isinstance(v, str) and len(v) > 0), "non-empty string"


def _string_list():
    return (
        lambda v: isinstance(v, list) and v and all(isinstance(x, str) for x in v),
        "non-empty list of strings",
    )


def _splits():
    def check(v):
        return (
            isinstance(v, dict)
            and set(v) <= {"train", "val", "test"}
            and all(_is_int(x) and x >= 0 for x in v.values())
            and sum(v.values()) > 0
        )
    return check, "dict of non-negative split counts (train/val/test)"


def _bool():
    return (lambda v: isinstance(v, bool)), "boolean"


def F(kind, default=None, required=False):
    check, desc = kind
    return Field(check, desc, default=default, required=required)


_PLUGIN_SCHEMA = {
    "endpoint": F(_string(), default=""),
    "frames_per_video": F(_int_range(2, 256), default=8),
    "videos_per_capture": F(_int_range(1, 64), default=1),
    "sampling_steps": F(_int_range(1, 10000), default=250),
    "guidance_weight": F(_num_range(0.0), default=6.0),
}

_RECON_SCHEMA = {
    "grid_size": F(_int_range(32, 128), default=64),
    "iters": F(_int_range(1, 100000), default=600),
    "ray_batch": F(_int_range(64, 65536), default=4096),
    "learning_rate": F(_num_range(0.0), default=0.15),
    "tv_weight": F(_num_range(0.0), default=5e-4),
    "n_samples": F(_int_range(8, 1024), default=128),
    "extra_poses": F(_int_range(0, 128), default=24),
    "generator_steps": F(_int_range(1, 4096), default=32),
    "densifier": F(_choice("model", "oracle"), default="model"),
}

SCHEMA = {
    "seed": F(_int_range(0), required=True),
    "dataset": {
        "splits": F(_splits(), required=True),
        "views": F(_int_range(2, 16), required=True),
        "kind": F(_choice("dynamics", "lighting", "none"), required=True),
        "layout": F(_choice("train", "eval_dynamics", "eval_lighting"), default="train"),
        "resolution": F(_int_range(16, 256), default=64),
        "min_objects": F(_int_range(1, 4), default=2),
        "max_objects": F(_int_range(1, 4), default=3),
    },
    "augment": {
        "source": F(_string(), required=True),
        "kind": F(_choice("dynamics", "lighting"), required=True),
        "mode": F(_choice("heuristic", "plugin"), default="heuristic"),
        "plugin": _PLUGIN_SCHEMA,
    },
    "model": {
        "timesteps": F(_int_range(2, 4096), default=256),
        "base_width": F(_int_range(4, 256), default=32),
        "emb_dim": F(_int_range(8, 1024), default=128),
        "codec_factor": F(_choice(1, 2), default=1),
        "latent_channels": F(_int_range(1, 8), default=3),
        "n_views": F(_int_range(2, 8), default=8),
    },
    "training": {
        "dataset": F(_string(), required=True),
        "steps": F(_int_range(1, 10**7), required=True),
        "batch_records": F(_int_range(1, 64), default=8),
        "learning_rate": F(_num_range(0.0), default=1e-4),
        "snapshot_every": F(_int_range(1, 10**6), default=250),
    },
    "eval": {
        "dataset": F(_string(), required=True),
        "protocol": F(_choice("dynamics", "lighting"), required=True),
        "methods": F(_string_list(), default=["oracle", "copy_input"]),
        "checkpoint": F(_string(), default=""),
        "sampling_steps": F(_int_range(1, 4096), default=64),
        "max_records": F(_int_range(1, 100000), default=10000),
        "contact_sheets": F(_int_range(0, 64), default=4),
        "reconstruct": F(_bool(), default=False),
        "reconstruct_cfg": _RECON_SCHEMA,
    },
    "reconstruct": {
        "dataset": F(_string(), required=True),
        "record_index": F(_int_range(0), default=0),
        "source": F(_choice("oracle", "harmonizer", "inconsistent"), default="oracle"),
        "checkpoint": F(_string(), default=""),
        "grid_size": F(_int_range(32, 128), default=64),
        "iters": F(_int_range(1, 100000), default=600),
        "ray_batch": F(_int_range(64, 65536), default=4096),
        "learning_rate": F(_num_range(0.0), default=0.15),
        "tv_weight": F(_num_range(0.0), default=5e-4),
        "n_samples": F(_int_range(8, 1024), default=128),
        "extra_poses": F(_int_range(0, 128), default=24),
        "generator_steps": F(_int_range(1, 4096), default=32),
        "orbit_frames": F(_int_range(1, 256), default=12),
        "sampling_steps": F(_int_range(1, 4096), default=64),
    },
}

_VALID_METHODS = ("oracle", "copy_input", "harmonizer")


def _validate_section(name, schema, data, violations):
    resolved = {}
    for key in data:
        if key not in schema:
            violations.append("%s.%s: unknown key" % (name, key))
    for key, spec in schema.items():
        if isinstance(spec, dict):
            sub = data.get(key, {})
            if not isinstance(sub, dict):
                violations.append("%s.%s: must be an object" % (name, key))
                sub = {}
            resolved[key] = _validate_section("%s.%s" % (name, key), spec, sub, violations)
            continue
        if key not in data:
            if spec.required:
                violations.append("%s.%s: missing required key" % (name, key))
            else:
                resolved[key] = spec.default
            continue
        value = data[key]
        if not spec.check(value):
            violations.append("%s.%s: expected %s, got %r" % (name, key, spec.describe, value))
        else:
            resolved[key] = value
    return resolved


def validate_config(raw: dict, sections=None) -> dict:
    """Validate and resolve (apply defaults); raises with every violation."""
    violations = []
    if not isinstance(raw, dict):
        raise ConfigValidationError(["config root must be a JSON object"])
    for key in raw:
        if key != "seed" and key not in SCHEMA:
            violations.append("%s: unknown section" % key)
    resolved = {}
    seed_spec = SCHEMA["seed"]
    if "seed" not in raw:
        violations.append("seed: missing required key")
    elif not seed_spec.check(raw["seed"]):
        violations.append("seed: expected %s, got %r" % (seed_spec.describe, raw["seed"]))
    else:
        resolved["seed"] = raw["seed"]

    wanted = sections if sections is not None else [
        k for k in SCHEMA if k != "seed" and k in raw
    ]
    for section in wanted:
        if section not in raw:
            violations.append("%s: missing required section" % section)
            continue
        if not isinstance(raw[section], dict):
            violations.append("%s: must be an object" % section)
            continue
        resolved[section] = _validate_section(
            section, SCHEMA[section], raw[section], violations
        )

    if "dataset" in resolved and not violations:
        ds = resolved["dataset"]
        if ds["min_objects"] > ds["max_objects"]:
            violations.append("dataset.min_objects: must be <= dataset.max_objects")
    if "eval" in resolved and "methods" in resolved.get("eval", {}):
        for m in resolved["eval"]["methods"] or []:
            if m not in _VALID_METHODS:
                violations.append("eval.methods: unknown method %r" % m)

    if violations:
        raise ConfigValidationError(sorted(violations))
    return resolved


def load_config(path, sections=None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise SimvsError("config file not found: %s" % path, code="CONFIG_NOT_FOUND")
    try:
        raw = json.loads(path.read_text())
    except ValueError as exc:
        raise ConfigValidationError(["config is not valid JSON: %s" % exc]) from exc
    return validate_config(raw, sections=sections)


def write_resolved_config(run_dir, resolved: dict) -> None:
    from . import __version__

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "resolved_config.json").write_text(
        json.dumps(resolved, sort_keys=True, indent=2) + "\n"
    )
    (run_dir / "version.json").write_text(
        json.dumps({"package": __version__, "config_format": 1}, sort_keys=True) + "\n"
    )
