"""Dataset persistence: manifest schema, atomic writes, record round trips.

Disk layout (fixed):
    <root>/manifest.json
    <root>/scenes/<id>/view_<k>_consistent.png
    <root>/scenes/<id>/view_<k>_inconsistent.png

The manifest is written last via an atomic rename, so a partially written
dataset never has a corrupt or dangling manifest.  Every image path is
relative to the dataset root and carries a sha256 checksum.
"""

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import io_png
from .camera import pose_from_json_dict, pose_to_json_dict
from .errors import DatasetNotFoundError
from .worldsim.scene import (
    DirectionalLight,
    GroundPlane,
    MultiviewRecord,
    Primitive,
    SceneSpec,
    SceneState,
)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def scene_to_json_dict(scene: SceneSpec) -> dict:
    return {
        "ground": {
            "half_extent": scene.ground.half_extent,
            "cell_size": scene.ground.cell_size,
            "color_a": list(map(float, scene.ground.color_a)),
            "color_b": list(map(float, scene.ground.color_b)),
            "noise_amp": scene.ground.noise_amp,
        },
        "objects": [
            {
                "kind": o.kind,
                "center": list(map(float, o.center)),
                "half_extents": list(map(float, o.half_extents)),
                "yaw": o.yaw,
                "albedo": list(map(float, o.albedo)),
            }
            for o in scene.objects
        ],
        "light": {
            "azimuth": scene.light.azimuth,
            "elevation": scene.light.elevation,
            "intensity": scene.light.intensity,
        },
        "ambient": scene.ambient,
        "sky_color": list(map(float, scene.sky_color)),
        "rng_seed": scene.rng_seed,
    }


def scene_from_json_dict(d: dict) -> SceneSpec:
    return SceneSpec(
        ground=GroundPlane(
            half_extent=d["ground"]["half_extent"],
            cell_size=d["ground"]["cell_size"],
            color_a=np.array(d["ground"]["color_a"]),
            color_b=np.array(d["ground"]["color_b"]),
            noise_amp=d["ground"]["noise_amp"],
        ),
        objects=tuple(
            Primitive(
                kind=o["kind"],
                center=np.array(o["center"]),
                half_extents=np.array(o["half_extents"]),
                yaw=o["yaw"],
                albedo=np.array(o["albedo"]),
            )
            for o in d["objects"]
        ),
        light=DirectionalLight(**d["light"]),
        ambient=d["ambient"],
        sky_color=np.array(d["sky_color"]),
        rng_seed=d["rng_seed"],
    )


def state_to_json_dict(state: SceneState) -> dict:
    return {
        "state_id": state.state_id,
        "object_deltas": [
            {"translation": list(map(float, t)), "yaw": y}
            for t, y in state.object_deltas
        ],
        "light_delta": list(state.light_delta),
    }


def state_from_json_dict(d: dict) -> SceneState:
    return SceneState(
        state_id=d["state_id"],
        object_deltas=tuple(
            (np.array(od["translation"]), od["yaw"]) for od in d["object_deltas"]
        ),
        light_delta=tuple(d["light_delta"]),
    )


def write_record_images(root: Path, record: MultiviewRecord) -> dict:
    """Write a record's PNGs; returns {relpath: sha256} for the manifest."""
    scene_dir = root / "scenes" / record.record_id
    scene_dir.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for k in range(record.n_views()):
        for tag, img in (("consistent", record.consistent[k]),
                         ("inconsistent", record.inconsistent[k])):
            rel = "scenes/%s/view_%d_%s.png" % (record.record_id, k, tag)
            io_png.write_rgb8(root / rel, img)
            checksums[rel] = _sha256(root / rel)
    return checksums


def record_to_manifest_entry(record: MultiviewRecord, checksums: dict) -> dict:
    n = record.n_views()
    entry = {
        "record_id": record.record_id,
        "split": record.split,
        "kind": record.kind,
        "scene_seed": record.scene.rng_seed,
        "scene": scene_to_json_dict(record.scene),
        "family": [state_to_json_dict(s) for s in record.family],
        "states": [int(s) for s in record.states],
        "poses": [pose_to_json_dict(p) for p in record.poses],
        "images": {
            "consistent": [
                "scenes/%s/view_%d_consistent.png" % (record.record_id, k)
                for k in range(n)
            ],
            "inconsistent": [
                "scenes/%s/view_%d_inconsistent.png" % (record.record_id, k)
                for k in range(n)
            ],
        },
        "checksums": checksums,
    }
    if record.prompt:
        entry["prompt"] = record.prompt
    return entry


def write_manifest(root, entries: list, meta: dict) -> Path:
    """Atomically write the manifest (tmp file + rename)."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": MANIFEST_VERSION,
        "meta": meta,
        "records": entries,
    }
    text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    tmp = root / (MANIFEST_NAME + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, root / MANIFEST_NAME)
    return root / MANIFEST_NAME


def manifest_checksum(root) -> str:
    return _sha256(Path(root) / MANIFEST_NAME)


def load_manifest(root) -> dict:
    root = Path(root)
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise DatasetNotFoundError("no manifest at %s" % path)
    payload = json.loads(path.read_text())
    if payload.get("version") != MANIFEST_VERSION:
        raise DatasetNotFoundError(
            "unsupported manifest version %r" % payload.get("version")
        )
    for entry in payload["records"]:
        for group in entry["images"].values():
            for rel in group:
                if os.path.isabs(rel):
                    raise DatasetNotFoundError("manifest contains absolute path %s" % rel)
                if not (root / rel).is_file():
                    raise DatasetNotFoundError("missing dataset image %s" % rel)
    return payload


def verify_checksums(root, payload: dict) -> None:
    root = Path(root)
    for entry in payload["records"]:
        for rel, digest in entry["checksums"].items():
            if _sha256(root / rel) != digest:
                raise DatasetNotFoundError("checksum mismatch for %s" % rel)


def load_record(root, entry: dict) -> MultiviewRecord:
    root = Path(root)
    consistent = [io_png.read_rgb8(root / rel) for rel in entry["images"]["consistent"]]
    inconsistent = [
        io_png.read_rgb8(root / rel) for rel in entry["images"]["inconsistent"]
    ]
    return MultiviewRecord(
        consistent=consistent,
        inconsistent=inconsistent,
        poses=[pose_from_json_dict(d) for d in entry["poses"]],
        states=list(entry["states"]),
        scene=scene_from_json_dict(entry["scene"]),
        kind=entry["kind"],
        family=tuple(state_from_json_dict(d) for d in entry["family"]),
        prompt=entry.get("prompt", ""),
        record_id=entry["record_id"],
        split=entry["split"],
    )


def load_records(root, split=None) -> list:
    """Load all records (optionally one split) of a dataset."""
    payload = load_manifest(root)
    records = []
    for entry in payload["records"]:
        if split is None or entry["split"] == split:
            records.append(load_record(root, entry))
    return records
