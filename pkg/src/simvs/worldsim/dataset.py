"""Dataset generation: sampled records persisted in the manifest layout."""

from pathlib import Path

from .. import manifest as mf
from ..seeding import child_seed, rng_for
from .scene import sample_record, sample_scene

_LAYOUT_MIN_VIEWS = {"train": 2, "eval_dynamics": 9, "eval_lighting": 4}


def generate_dataset(cfg: dict, out_dir, global_seed: int) -> Path:
    """Render and persist a dataset of multiview records.

    ``cfg`` is the validated ``dataset`` config section: split counts, views
    per record, inconsistency kind, record layout, resolution, and object
    count bounds.  Scene seeds derive from the global seed by record index,
    so splits are disjoint by construction and regeneration is idempotent.
    """
    out = Path(out_dir)
    splits = cfg["splits"]
    n_views = cfg["views"]
    kind = cfg["kind"]
    layout = cfg.get("layout", "train")
    resolution = cfg.get("resolution", 64)
    min_objects = cfg.get("min_objects", 2)
    max_objects = cfg.get("max_objects", 3)
    if n_views < _LAYOUT_MIN_VIEWS[layout]:
        raise ValueError("layout %r needs >= %d views" % (layout, _LAYOUT_MIN_VIEWS[layout]))

    entries = []
    index = 0
    for split in ("train", "val", "test"):
        for _ in range(splits.get(split, 0)):
            scene_seed = child_seed(global_seed, "scene/%d" % index)
            scene_rng = rng_for(global_seed, "scene/%d" % index)
            scene = sample_scene(scene_rng, scene_seed,
                                 min_objects=min_objects, max_objects=max_objects)
            record_rng = rng_for(global_seed, "record/%d" % index)
            record = sample_record(scene, n_views, kind, record_rng,
                                   resolution=resolution, layout=layout)
            record.record_id = "%05d" % index
            record.split = split
            checksums = mf.write_record_images(out, record)
            entries.append(mf.record_to_manifest_entry(record, checksums))
            index += 1

    meta = {
        "seed": int(global_seed),
        "kind": kind,
        "layout": layout,
        "views": n_views,
        "resolution": resolution,
        "splits": {k: int(v) for k, v in splits.items()},
    }
    mf.write_manifest(out, entries, meta)
    return out
