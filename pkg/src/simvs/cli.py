"""Command-line surface: generate | augment | train | eval | reconstruct.

Every command takes a single JSON config (strictly validated), an optional
seed override, and an output directory; each writes the resolved config and
a code-version stamp into its run directory.  Failures exit nonzero with a
machine-readable error JSON on stderr.
"""

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

from .config import load_config, write_resolved_config
from .errors import (
    CheckpointNotFoundError,
    RecordSkipped,
    SimvsError,
)

PLUGIN_ENDPOINT_ENV = "SIMVS_PLUGIN_ENDPOINT"


def _dataset_out(args, default_name):
    return Path(args.out) if args.out else Path("runs") / default_name


def cmd_generate(args) -> int:
    from .worldsim.dataset import generate_dataset

    cfg = load_config(args.config, sections=["dataset"])
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = _dataset_out(args, "generate")
    generate_dataset(cfg["dataset"], out, cfg["seed"])
    write_resolved_config(out, cfg)
    print(json.dumps({"dataset": str(out)}))
    return 0


def _build_plugin(plugin_cfg):
    from .prompts import HTTPVideoPlugin, SubprocessVideoPlugin

    endpoint = os.environ.get(PLUGIN_ENDPOINT_ENV, "") or plugin_cfg["endpoint"]
    if not endpoint:
        raise SimvsError(
            "plugin mode needs an endpoint (config augment.plugin.endpoint or $%s)"
            % PLUGIN_ENDPOINT_ENV,
            code="PLUGIN_FAILED",
        )
    if endpoint.startswith("http://") or endpoint.startswith("https://"):
        return HTTPVideoPlugin(endpoint)
    return SubprocessVideoPlugin(shlex.split(endpoint))


def cmd_augment(args) -> int:
    from . import manifest as mf
    from .augment import make_heuristic_record
    from .prompts import PluginJobLog, VideoPluginConfig, augment_capture_via_plugin
    from .seeding import rng_for

    cfg = load_config(args.config, sections=["augment"])
    if args.seed is not None:
        cfg["seed"] = args.seed
    acfg = cfg["augment"]
    out = _dataset_out(args, "augment")
    payload = mf.load_manifest(acfg["source"])
    entries = []
    job_log = {}
    plugin = None
    plugin_cfg = None
    if acfg["mode"] == "plugin":
        plugin = _build_plugin(acfg["plugin"])
        plugin_cfg = VideoPluginConfig(
            endpoint=os.environ.get(PLUGIN_ENDPOINT_ENV, "") or acfg["plugin"]["endpoint"],
            frames_per_video=acfg["plugin"]["frames_per_video"],
            videos_per_capture=acfg["plugin"]["videos_per_capture"],
            sampling_steps=acfg["plugin"]["sampling_steps"],
            guidance_weight=acfg["plugin"]["guidance_weight"],
        )
    for entry in payload["records"]:
        record = mf.load_record(acfg["source"], entry)
        rng = rng_for(cfg["seed"], "augment/%s" % record.record_id)
        if acfg["mode"] == "heuristic":
            new_record = make_heuristic_record(record, acfg["kind"], rng)
        else:
            try:
                new_record, log = augment_capture_via_plugin(
                    record, plugin, plugin_cfg, rng,
                    workdir=out / "plugin_work" / record.record_id,
                    kind=acfg["kind"],
                )
                job_log[record.record_id] = log.to_json_dict()
            except RecordSkipped as exc:
                job_log[record.record_id] = {"skipped": True, "reason": str(exc)}
                continue
        checksums = mf.write_record_images(out, new_record)
        entries.append(mf.record_to_manifest_entry(new_record, checksums))
    meta = dict(payload["meta"])
    meta.update({"augmented": acfg["kind"], "mode": acfg["mode"], "seed": cfg["seed"]})
    mf.write_manifest(out, entries, meta)
    (out / "job_log.json").write_text(json.dumps(job_log, sort_keys=True, indent=2) + "\n")
    write_resolved_config(out, cfg)
    print(json.dumps({"dataset": str(out), "records": len(entries)}))
    return 0


def _model_parts(mcfg):
    from .harmonizer.codec import LatentCodec
    from .harmonizer.model import ModelConfig
    from .harmonizer.schedule import cosine_schedule

    codec = LatentCodec(factor=mcfg["codec_factor"], channels=mcfg["latent_channels"])
    schedule = cosine_schedule(mcfg["timesteps"])
    config = ModelConfig(
        n_views=mcfg["n_views"],
        latent_channels=mcfg["latent_channels"],
        base_width=mcfg["base_width"],
        emb_dim=mcfg["emb_dim"],
    )
    return codec, schedule, config


def cmd_train(args) -> int:
    from . import manifest as mf
    from .harmonizer.model import DenoiserModel
    from .harmonizer.train import TrainConfig, train
    from .seeding import child_seed

    cfg = load_config(args.config, sections=["model", "training"])
    if args.seed is not None:
        cfg["seed"] = args.seed
    tcfg = cfg["training"]
    out = _dataset_out(args, "train")
    records = mf.load_records(tcfg["dataset"], split="train")
    val_records = mf.load_records(tcfg["dataset"], split="val")
    codec, schedule, model_config = _model_parts(cfg["model"])
    model = DenoiserModel(model_config, seed=child_seed(cfg["seed"], "model/init"))
    train_config = TrainConfig(
        steps=tcfg["steps"],
        batch_records=tcfg["batch_records"],
        learning_rate=tcfg["learning_rate"],
        snapshot_every=tcfg["snapshot_every"],
        seed=child_seed(cfg["seed"], "train"),
    )
    write_resolved_config(out, cfg)
    train(model, records, train_config, schedule, codec,
          run_dir=out, val_records=val_records)
    print(json.dumps({"run": str(out), "params": model.n_params}))
    return 0


def cmd_eval(args) -> int:
    from . import manifest as mf
    from .evalproto import (
        EvalContext,
        ReconSettings,
        build_methods,
        contact_sheet,
        run_protocol,
        write_eval_outputs,
    )
    from .harmonizer.checkpoint import load_denoiser
    from .harmonizer.codec import LatentCodec
    from .seeding import child_seed

    cfg = load_config(args.config, sections=["eval"])
    if args.seed is not None:
        cfg["seed"] = args.seed
    ecfg = cfg["eval"]
    out = _dataset_out(args, "eval")
    records = mf.load_records(ecfg["dataset"])[: ecfg["max_records"]]
    model = schedule = None
    codec = LatentCodec()
    needs_model = "harmonizer" in ecfg["methods"] or (
        ecfg["reconstruct"] and ecfg["reconstruct_cfg"]["densifier"] == "model"
    )
    if needs_model:
        if not ecfg["checkpoint"]:
            raise CheckpointNotFoundError("eval config needs a checkpoint path")
        model, schedule, codec = load_denoiser(ecfg["checkpoint"])
    ctx = EvalContext(
        seed=child_seed(cfg["seed"], "eval"),
        codec=codec,
        schedule=schedule,
        model=model,
        sampling_steps=ecfg["sampling_steps"],
    )
    methods = build_methods(ecfg["methods"], ctx)
    rc = ecfg["reconstruct_cfg"]
    recon = ReconSettings(
        grid_size=rc["grid_size"], iters=rc["iters"], ray_batch=rc["ray_batch"],
        learning_rate=rc["learning_rate"], tv_weight=rc["tv_weight"],
        n_samples=rc["n_samples"], extra_poses=rc["extra_poses"],
        generator_steps=rc["generator_steps"], densifier=rc["densifier"],
    )
    reports, details = run_protocol(
        records, methods, ecfg["protocol"], ctx,
        reconstruct=ecfg["reconstruct"], recon=recon,
    )
    sheets = []
    for record in records[: ecfg["contact_sheets"]]:
        rows = [[record.consistent[i] for i in range(1, 8)],
                [record.inconsistent[i] for i in range(1, 8)]]
        from .seeding import rng_for

        for method in methods:
            rng = rng_for(ctx.seed, "eval/%s/%s" % (method.name, record.record_id))
            rows.append(method.harmonize(record, rng))
        sheets.append(("sheet_%s.png" % record.record_id, contact_sheet(rows, None)))
    write_eval_outputs(out, reports, details, sheets)
    write_resolved_config(out, cfg)
    print(json.dumps({"run": str(out), "reports": len(reports)}))
    return 0


def cmd_reconstruct(args) -> int:
    from . import io_png
    from . import manifest as mf
    from .errors import DatasetNotFoundError
    from .evalproto import HarmonizerMethod
    from .harmonizer.checkpoint import load_denoiser
    from .reconstruct.densify import (
        HarmonizerViewGenerator,
        OracleViewGenerator,
        densify,
    )
    from .reconstruct.fit import FitConfig, fit_field
    from .reconstruct.volume import far_sentinel, render_field
    from .seeding import child_seed, rng_for
    from .worldsim.scene import _orbit_poses

    cfg = load_config(args.config, sections=["reconstruct"])
    if args.seed is not None:
        cfg["seed"] = args.seed
    rcfg = cfg["reconstruct"]
    out = _dataset_out(args, "reconstruct")
    payload = mf.load_manifest(rcfg["dataset"])
    if rcfg["record_index"] >= len(payload["records"]):
        raise DatasetNotFoundError(
            "record index %d out of range" % rcfg["record_index"]
        )
    record = mf.load_record(rcfg["dataset"], payload["records"][rcfg["record_index"]])

    model = schedule = codec = None
    if rcfg["source"] == "harmonizer" or (rcfg["checkpoint"] and rcfg["source"] != "oracle"):
        if not rcfg["checkpoint"]:
            raise CheckpointNotFoundError("reconstruct source needs a checkpoint path")
        model, schedule, codec = load_denoiser(rcfg["checkpoint"])

    if rcfg["source"] == "oracle":
        views = [(record.consistent[i], record.poses[i]) for i in range(8)]
        generator = OracleViewGenerator(record.scene)
    elif rcfg["source"] == "inconsistent":
        views = [(record.consistent[0], record.poses[0])]
        views += [(record.inconsistent[i], record.poses[i]) for i in range(1, 8)]
        if model is not None:
            generator = HarmonizerViewGenerator(
                model, schedule, codec,
                seed=child_seed(cfg["seed"], "reconstruct/densify"),
                n_steps=rcfg["generator_steps"],
            )
        else:
            generator = OracleViewGenerator(record.scene)
    else:  # harmonizer
        method = HarmonizerMethod(model, schedule, codec,
                                  sampling_steps=rcfg["sampling_steps"])
        rng = rng_for(cfg["seed"], "reconstruct/harmonize")
        harmonized = method.harmonize(record, rng)
        views = [(record.consistent[0], record.poses[0])]
        views += [(harmonized[i - 1], record.poses[i]) for i in range(1, 8)]
        generator = HarmonizerViewGenerator(
            model, schedule, codec,
            seed=child_seed(cfg["seed"], "reconstruct/densify"),
            n_steps=rcfg["generator_steps"],
        )

    extra = []
    if rcfg["extra_poses"] > 0:
        rng = rng_for(cfg["seed"], "reconstruct/extra_poses")
        extra = _orbit_poses(record.scene, rcfg["extra_poses"], rng,
                             record.poses[0].resolution[0])
    densified = densify(generator, views, extra)
    images = [v[0] for v in views] + [d[0] for d in densified]
    poses = [v[1] for v in views] + [d[1] for d in densified]
    field, curve = fit_field(
        images, poses,
        FitConfig(
            grid_size=rcfg["grid_size"], iters=rcfg["iters"],
            ray_batch=rcfg["ray_batch"], learning_rate=rcfg["learning_rate"],
            tv_weight=rcfg["tv_weight"], n_samples=rcfg["n_samples"],
            seed=child_seed(cfg["seed"], "reconstruct/fit"),
        ),
    )
    out.mkdir(parents=True, exist_ok=True)
    field.save(out / "field.npz")
    (out / "fit_curve.json").write_text(json.dumps(curve) + "\n")
    orbit_rng = rng_for(cfg["seed"], "reconstruct/orbit")
    orbit = _orbit_poses(record.scene, rcfg["orbit_frames"], orbit_rng,
                         record.poses[0].resolution[0])
    frames_dir = out / "orbit"
    frames_dir.mkdir(exist_ok=True)
    for i, pose in enumerate(orbit):
        img, depth = render_field(field, pose, n_samples=rcfg["n_samples"])
        io_png.write_rgb8(frames_dir / ("frame_%03d.png" % i), img)
        io_png.write_depth16(
            frames_dir / ("depth_%03d.png" % i), depth,
            scale=far_sentinel(field, pose.center()),
        )
    write_resolved_config(out, cfg)
    print(json.dumps({"run": str(out), "frames": len(orbit)}))
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "augment": cmd_augment,
    "train": cmd_train,
    "eval": cmd_eval,
    "reconstruct": cmd_reconstruct,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simvs",
        description="Simulate inconsistent captures, train a harmonizer, "
                    "reconstruct and evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output/run directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SimvsError as exc:
        print(json.dumps(exc.to_json_dict(), sort_keys=True), file=sys.stderr)
        return 1
    except Exception as exc:  # unexpected: still report machine-readably
        print(
            json.dumps({"error_code": "INTERNAL", "message": str(exc)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
