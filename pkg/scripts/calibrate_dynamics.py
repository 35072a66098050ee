"""Calibration run: does the harmonizer beat copy-input on held-out dynamics?

Writes progress to stdout; used to pick acceptance-config step counts.
"""

import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from simvs import manifest as mf
from simvs.config import validate_config
from simvs.evalproto import CopyInputMethod, EvalContext, HarmonizerMethod, build_methods, run_protocol
from simvs.harmonizer import (
    DenoiserModel,
    LatentCodec,
    ModelConfig,
    TrainConfig,
    cosine_schedule,
    train,
)
from simvs.seeding import child_seed, rng_for
from simvs.worldsim.dataset import generate_dataset

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("/tmp/calib")
STEPS = int(sys.argv[2]) if len(sys.argv) > 2 else 1500
LR = float(sys.argv[3]) if len(sys.argv) > 3 else 3e-4
N_TRAIN = int(sys.argv[4]) if len(sys.argv) > 4 else 200

OUT.mkdir(parents=True, exist_ok=True)

t0 = time.time()
train_cfg = validate_config({
    "seed": 1000,
    "dataset": {"splits": {"train": N_TRAIN, "val": 8}, "views": 8,
                "kind": "dynamics", "resolution": 32},
})
eval_cfg = validate_config({
    "seed": 2000,
    "dataset": {"splits": {"test": 20}, "views": 12, "kind": "dynamics",
                "layout": "eval_dynamics", "resolution": 32},
})
if not (OUT / "train_ds" / "manifest.json").exists():
    generate_dataset(train_cfg["dataset"], OUT / "train_ds", 1000)
    generate_dataset(eval_cfg["dataset"], OUT / "eval_ds", 2000)
print("datasets: %.1fs" % (time.time() - t0), flush=True)

records = mf.load_records(OUT / "train_ds", split="train")
val_records = mf.load_records(OUT / "train_ds", split="val")
eval_records = mf.load_records(OUT / "eval_ds")

codec = LatentCodec()
schedule = cosine_schedule(256)
model = DenoiserModel(ModelConfig(base_width=32), seed=child_seed(1000, "model/init"))
print("params:", model.n_params, flush=True)

t0 = time.time()
model, curve = train(
    model, records,
    TrainConfig(steps=STEPS, batch_records=8, learning_rate=LR,
                seed=child_seed(1000, "train"), snapshot_every=250),
    schedule, codec, run_dir=OUT / "run", val_records=val_records,
)
print("train %d steps: %.0fs; loss %.4f -> %.4f; val %s" % (
    STEPS, time.time() - t0, curve["loss"][0],
    float(np.mean(curve["loss"][-50:])),
    ["%.4f" % v for v in curve["val_loss"]],
), flush=True)

ctx = EvalContext(seed=child_seed(2000, "eval"), codec=codec, schedule=schedule,
                  model=model, sampling_steps=32)
methods = [CopyInputMethod(), HarmonizerMethod(model, schedule, codec, sampling_steps=32)]
t0 = time.time()
reports, details = run_protocol(eval_records, methods, "dynamics", ctx)
print("eval: %.0fs" % (time.time() - t0), flush=True)
by = {r.method: r for r in reports}
copy_rec = [r["psnr"] for r in by["copy_input"].records]
harm_rec = [r["psnr"] for r in by["harmonizer"].records]
wins = sum(h > c for h, c in zip(harm_rec, copy_rec))
print("copy_input mean PSNR: %.2f  harmonizer mean PSNR: %.2f" % (
    by["copy_input"].psnr_mean, by["harmonizer"].psnr_mean), flush=True)
print("per-scene wins: %d/%d" % (wins, len(copy_rec)), flush=True)
print("per-scene margins:", ["%.2f" % (h - c) for h, c in zip(harm_rec, copy_rec)], flush=True)
(OUT / "calib_result.json").write_text(json.dumps({
    "copy_psnr": by["copy_input"].psnr_mean,
    "harm_psnr": by["harmonizer"].psnr_mean,
    "wins": wins, "n": len(copy_rec),
}))
