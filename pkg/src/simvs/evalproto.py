"""Evaluation protocols: harmonization scoring and full 3D reconstruction runs.

Both protocols share the machinery: every method maps a record's posed
inputs to 7 images for views 1..7, which are scored against the consistent
ground-truth renders; optionally each method's outputs are densified, fit
into a voxel field, and scored on held-out poses.  A record that fails for
any method is skipped for all methods so comparisons stay paired.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from . import io_png
from .errors import SimvsError
from .harmonizer.batch import pack_batch
from .harmonizer.sampling import sample
from .metrics import MetricsReport, dump_reports_json, psnr, render_markdown_table, ssim
from .reconstruct.densify import (
    DEFAULT_EXTRA_POSES,
    HarmonizerViewGenerator,
    OracleViewGenerator,
    densify,
)
from .reconstruct.fit import FitConfig, fit_field
from .reconstruct.volume import render_field
from .seeding import child_seed, rng_for
from .worldsim.scene import _orbit_poses


@dataclass
class EvalContext:
    seed: int
    codec: object
    schedule: object = None
    model: object = None
    sampling_steps: int = 64


@dataclass
class ReconSettings:
    grid_size: int = 64
    iters: int = 600
    ray_batch: int = 4096
    learning_rate: float = 0.15
    tv_weight: float = 5e-4
    n_samples: int = 128
    extra_poses: int = DEFAULT_EXTRA_POSES
    generator_steps: int = 32
    densifier: str = "model"  # "model" | "oracle"


class OracleMethod:
    """Upper bound: returns the ground-truth consistent views."""

    name = "oracle"

    def harmonize(self, record, rng):
        return [record.consistent[i].copy() for i in range(1, 8)]


class CopyInputMethod:
    """Lower baseline: returns the inconsistent inputs unchanged."""

    name = "copy_input"

    def harmonize(self, record, rng):
        return [record.inconsistent[i].copy() for i in range(1, 8)]


class HarmonizerMethod:
    """Samples the trained multiview diffusion model."""

    name = "harmonizer"

    def __init__(self, model, schedule, codec, sampling_steps=64):
        self.model = model
        self.schedule = schedule
        self.codec = codec
        self.sampling_steps = sampling_steps

    @staticmethod
    def conditioning_count(record) -> int:
        n = sum(1 for i in range(1, 8) if record.states[i] != 0)
        return max(1, min(n, 7))

    def harmonize(self, record, rng):
        n = self.conditioning_count(record)
        batch = pack_batch(record, n, rng, codec=self.codec,
                           view_indices=tuple(range(8)))
        return sample(self.model, self.schedule, batch, rng,
                      codec=self.codec, n_steps=self.sampling_steps)


def build_methods(names, ctx: EvalContext):
    methods = []
    for name in names:
        if name == "oracle":
            methods.append(OracleMethod())
        elif name == "copy_input":
            methods.append(CopyInputMethod())
        elif name == "harmonizer":
            if ctx.model is None:
                raise SimvsError("harmonizer method needs a checkpoint",
                                 code="CHECKPOINT_NOT_FOUND")
            methods.append(
                HarmonizerMethod(ctx.model, ctx.schedule, ctx.codec,
                                 sampling_steps=ctx.sampling_steps)
            )
        else:
            raise SimvsError("unknown eval method %r" % name, code="CONFIG_INVALID")
    return methods


def _validate_record(record, protocol):
    if record.n_views() < 8:
        raise SimvsError("record %s has fewer than 8 views" % record.record_id)
    if protocol == "dynamics":
        if record.n_views() < 12:
            raise SimvsError("dynamics protocol needs records with >= 12 views")
        if any(record.states[i] == 0 for i in range(1, 8)):
            raise SimvsError("dynamics protocol expects 7 inconsistent inputs")
    elif protocol == "lighting":
        if len({record.states[1], record.states[2]}) != 2 or 0 in (
            record.states[1], record.states[2]
        ):
            raise SimvsError("lighting protocol expects 2 distinct non-reference states")
    else:
        raise SimvsError("unknown protocol %r" % protocol)


def _score_views(outputs, gts):
    ps = [psnr(o, g) for o, g in zip(outputs, gts)]
    ss = [ssim(o, g) for o, g in zip(outputs, gts)]
    return ps, ss


def _make_generator(ctx, recon, record, method_name):
    if recon.densifier == "oracle" or ctx.model is None:
        return OracleViewGenerator(record.scene)
    return HarmonizerViewGenerator(
        ctx.model, ctx.schedule, ctx.codec,
        seed=child_seed(ctx.seed, "eval/densify/%s/%s" % (method_name, record.record_id)),
        n_steps=recon.generator_steps,
    )


def _reconstruct_and_score(ctx, recon, record, method_name, harmonized):
    held_out = list(range(8, record.n_views()))
    if not held_out:
        raise SimvsError("reconstruction scoring needs held-out views")
    views = [(record.consistent[0], record.poses[0])]
    views += [(harmonized[i - 1], record.poses[i]) for i in range(1, 8)]
    extra = []
    if recon.extra_poses > 0:
        rng = rng_for(ctx.seed, "eval/extra_poses/%s" % record.record_id)
        resolution = record.poses[0].resolution[0]
        extra = _orbit_poses(record.scene, recon.extra_poses, rng, resolution)
    generator = _make_generator(ctx, recon, record, method_name)
    densified = densify(generator, views, extra)
    images = [v[0] for v in views] + [d[0] for d in densified]
    poses = [v[1] for v in views] + [d[1] for d in densified]
    cfg = FitConfig(
        grid_size=recon.grid_size,
        iters=recon.iters,
        ray_batch=recon.ray_batch,
        learning_rate=recon.learning_rate,
        tv_weight=recon.tv_weight,
        n_samples=recon.n_samples,
        seed=child_seed(ctx.seed, "eval/fit/%s/%s" % (method_name, record.record_id)),
    )
    field, _ = fit_field(images, poses, cfg)
    ps = []
    ss = []
    for i in held_out:
        img, _ = render_field(field, record.poses[i], n_samples=recon.n_samples)
        ps.append(psnr(img, record.consistent[i]))
        ss.append(ssim(img, record.consistent[i]))
    return ps, ss


def run_protocol(records, methods, protocol: str, ctx: EvalContext,
                 reconstruct: bool = False, recon: ReconSettings = None,
                 perceptual=None):
    """Returns (reports, details).  ``details`` holds per-record outcomes."""
    recon = recon or ReconSettings()
    harm = {m.name: {"psnr": [], "ssim": [], "lpips": [], "records": []}
            for m in methods}
    rec3d = {m.name: {"psnr": [], "ssim": [], "records": []} for m in methods}
    skipped = []
    for record in records:
        _validate_record(record, protocol)
        outputs = {}
        try:
            for method in methods:
                rng = rng_for(ctx.seed, "eval/%s/%s" % (method.name, record.record_id))
                outputs[method.name] = method.harmonize(record, rng)
            recon_scores = {}
            if reconstruct:
                for method in methods:
                    recon_scores[method.name] = _reconstruct_and_score(
                        ctx, recon, record, method.name, outputs[method.name]
                    )
        except SimvsError:
            raise
        except Exception as exc:  # paired skip: drop the record for all methods
            skipped.append({"record": record.record_id, "reason": str(exc)})
            continue
        gts = [record.consistent[i] for i in range(1, 8)]
        for method in methods:
            ps, ss = _score_views(outputs[method.name], gts)
            h = harm[method.name]
            h["psnr"].extend(ps)
            h["ssim"].extend(ss)
            if perceptual is not None:
                h["lpips"].extend(
                    [float(perceptual(o, g)) for o, g in zip(outputs[method.name], gts)]
                )
            h["records"].append(
                {"record": record.record_id,
                 "psnr": float(np.mean(ps)), "ssim": float(np.mean(ss))}
            )
            if reconstruct:
                rp, rs = recon_scores[method.name]
                r = rec3d[method.name]
                r["psnr"].extend(rp)
                r["ssim"].extend(rs)
                r["records"].append(
                    {"record": record.record_id,
                     "psnr": float(np.mean(rp)), "ssim": float(np.mean(rs))}
                )

    reports = []
    for method in methods:
        h = harm[method.name]
        reports.append(
            MetricsReport(
                method=method.name,
                protocol="%s/harmonization" % protocol,
                psnr_per_view=h["psnr"],
                ssim_per_view=h["ssim"],
                lpips_per_view=h["lpips"] if perceptual is not None else None,
                records=h["records"],
            )
        )
    if reconstruct:
        for method in methods:
            r = rec3d[method.name]
            reports.append(
                MetricsReport(
                    method=method.name,
                    protocol="%s/reconstruction" % protocol,
                    psnr_per_view=r["psnr"],
                    ssim_per_view=r["ssim"],
                    records=r["records"],
                )
            )
    details = {"skipped": skipped, "n_records": len(records)}
    return reports, details


def eval_dynamics_protocol(records, methods, ctx, **kwargs):
    return run_protocol(records, methods, "dynamics", ctx, **kwargs)


def eval_lighting_protocol(records, methods, ctx, **kwargs):
    return run_protocol(records, methods, "lighting", ctx, **kwargs)


def paired_sign_test(a, b):
    """One-sided sign test for median(a - b) > 0; ties are dropped."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired test needs equal-length samples")
    wins = int(np.sum(a > b))
    losses = int(np.sum(a < b))
    n = wins + losses
    if n == 0:
        return {"pvalue": 1.0, "wins": 0, "losses": 0, "ties": len(a)}
    res = stats.binomtest(wins, n, 0.5, alternative="greater")
    return {
        "pvalue": float(res.pvalue),
        "wins": wins,
        "losses": losses,
        "ties": int(len(a) - n),
    }


def record_means(report: MetricsReport, key: str = "psnr"):
    return [r[key] for r in report.records]


def contact_sheet(rows, labels, pad: int = 2) -> np.ndarray:
    """Tile rows of images (lists of HxWx3) into one labeled-free grid image."""
    n_cols = max(len(r) for r in rows)
    h, w = rows[0][0].shape[:2]
    grid = np.ones(
        (len(rows) * (h + pad) - pad, n_cols * (w + pad) - pad, 3), dtype=np.float64
    )
    for ri, row in enumerate(rows):
        for ci, img in enumerate(row):
            y = ri * (h + pad)
            x = ci * (w + pad)
            grid[y : y + h, x : x + w] = img
    return grid


def write_eval_outputs(out_dir, reports, details, sheets=()):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "reports.json").write_text(dump_reports_json(reports))
    (out / "reports.md").write_text(render_markdown_table(reports))
    (out / "eval_details.json").write_text(
        json.dumps(details, sort_keys=True, indent=2) + "\n"
    )
    for name, grid in sheets:
        io_png.write_rgb8(out / name, grid)
