"""Conditioning layout: packing records into the 8-view denoiser batch.

Slot 0 always carries the reference view (clean latent, all-ones mask).
Slots 1..7 carry targets; the first ``n`` of them also carry the latent of
the inconsistent observation at that pose, the rest are zero-filled with a
drop flag raised.  The reference slot's conditioning channel duplicates the
reference latent (it is an observed, perfectly consistent view).
"""

from dataclasses import dataclass, replace

import numpy as np

from ..camera import raymap_from_pose, scale_pose
from .codec import LatentCodec


@dataclass(frozen=True)
class HarmonizationBatch:
    reference_latent: np.ndarray       # (h,w,C)
    target_latents: np.ndarray         # (7,h,w,C) clean latents of slots 1..7
    inconsistent_latents: np.ndarray   # (7,h,w,C), zero where dropped
    raymaps: np.ndarray                # (8,h,w,6)
    reference_mask: np.ndarray         # (8,h,w,1), ones only for slot 0
    drop_flags: np.ndarray             # (8,), 1.0 where conditioning absent
    conditioning_count: int            # n in [0,7]; 0 only for generation batches
    view_indices: tuple                # record view index per slot
    poses: tuple                       # CameraPose per slot

    @property
    def n_views(self) -> int:
        return self.raymaps.shape[0]

    @property
    def latent_shape(self) -> tuple:
        return self.reference_latent.shape


def _raymap_channels(pose, factor: int) -> np.ndarray:
    return raymap_from_pose(scale_pose(pose, factor)).as_channels()


def _record_raymaps(record, view_indices, factor: int) -> np.ndarray:
    """Per-view raymap channels, cached on the record (poses never change)."""
    cache = getattr(record, "_raymap_cache", None)
    if cache is None:
        cache = {}
        record._raymap_cache = cache
    out = []
    for v in view_indices:
        key = (v, factor)
        if key not in cache:
            cache[key] = _raymap_channels(record.poses[v], factor)
        out.append(cache[key])
    return np.stack(out)


def pack_batch(record, n: int, rng: np.random.Generator,
               codec: LatentCodec = LatentCodec(),
               view_indices=None) -> HarmonizationBatch:
    """Pack a record for training: 1 reference + 7 target slots.

    ``n`` in [1,7] inconsistent observations are kept (the first n slots
    after the reference); the remaining slots are dropped.  When the record
    has more than 8 views, ``rng`` picks and orders the 7 non-reference
    views; pass ``view_indices`` to fix the slot order explicitly.
    """
    if record.n_views() < 8:
        raise ValueError("pack_batch needs a record with >= 8 views")
    if not 1 <= n <= 7:
        raise ValueError("conditioning count n must lie in [1, 7]")
    if view_indices is None:
        others = rng.permutation(np.arange(1, record.n_views()))[:7]
        view_indices = (0, *map(int, others))
    else:
        view_indices = tuple(view_indices)
        if len(view_indices) != 8 or view_indices[0] != 0:
            raise ValueError("view_indices must be 8 entries starting with view 0")

    reference = codec.encode(record.consistent[0])
    targets = np.stack([codec.encode(record.consistent[v]) for v in view_indices[1:]])
    cond = np.zeros_like(targets)
    for slot in range(1, n + 1):
        cond[slot - 1] = codec.encode(record.inconsistent[view_indices[slot]])

    poses = tuple(record.poses[v] for v in view_indices)
    raymaps = _record_raymaps(record, view_indices, codec.factor)
    h, w = raymaps.shape[1:3]
    mask = np.zeros((8, h, w, 1))
    mask[0] = 1.0
    drop = np.zeros(8)
    drop[n + 1 :] = 1.0
    return HarmonizationBatch(
        reference_latent=reference,
        target_latents=targets,
        inconsistent_latents=cond,
        raymaps=raymaps,
        reference_mask=mask,
        drop_flags=drop,
        conditioning_count=n,
        view_indices=view_indices,
        poses=poses,
    )


def pack_generation_batch(reference_image, reference_pose, cond_images, cond_poses,
                          target_poses, codec: LatentCodec = LatentCodec()
                          ) -> HarmonizationBatch:
    """Pack a batch for view generation / densification.

    Slots 1..k carry posed *consistent* images as conditioning observations
    (their targets will be re-generated), slots k+1..7 carry the novel target
    poses with dropped conditioning.  Requires k + len(target_poses) <= 7.
    """
    k = len(cond_images)
    n_targets = len(target_poses)
    if k + n_targets > 7:
        raise ValueError("at most 7 non-reference slots available")
    reference = codec.encode(reference_image)
    latent_shape = reference.shape
    targets = np.zeros((7, *latent_shape))
    cond = np.zeros((7, *latent_shape))
    for i, img in enumerate(cond_images):
        cond[i] = codec.encode(img)
    poses = [reference_pose, *cond_poses, *target_poses]
    # pad unused slots by repeating the last target pose; they are dropped
    while len(poses) < 8:
        poses.append(poses[-1])
    raymaps = np.stack([_raymap_channels(p, codec.factor) for p in poses])
    h, w = raymaps.shape[1:3]
    mask = np.zeros((8, h, w, 1))
    mask[0] = 1.0
    drop = np.zeros(8)
    drop[k + 1 :] = 1.0
    return HarmonizationBatch(
        reference_latent=reference,
        target_latents=targets,
        inconsistent_latents=cond,
        raymaps=raymaps,
        reference_mask=mask,
        drop_flags=drop,
        conditioning_count=k,
        view_indices=tuple(range(8)),
        poses=tuple(poses),
    )


def assemble_inputs(batch: HarmonizationBatch, noisy_targets: np.ndarray) -> np.ndarray:
    """Stack the per-slot channel layout into the (8, h, w, Cin) model input."""
    h, w, c = batch.latent_shape
    rows = []
    for slot in range(8):
        latent = batch.reference_latent if slot == 0 else noisy_targets[slot - 1]
        cond = batch.reference_latent if slot == 0 else batch.inconsistent_latents[slot - 1]
        drop = np.full((h, w, 1), batch.drop_flags[slot])
        rows.append(
            np.concatenate(
                [latent, cond, batch.raymaps[slot], batch.reference_mask[slot], drop],
                axis=-1,
            )
        )
    return np.stack(rows)


def permute_batch(batch: HarmonizationBatch, perm) -> HarmonizationBatch:
    """Permute the 7 non-reference slots consistently (targets, conditioning,
    raymaps, flags, poses move together)."""
    perm = np.asarray(perm)
    if sorted(perm.tolist()) != list(range(7)):
        raise ValueError("perm must be a permutation of range(7)")
    slot_perm = np.concatenate([[0], perm + 1])
    return replace(
        batch,
        target_latents=batch.target_latents[perm],
        inconsistent_latents=batch.inconsistent_latents[perm],
        raymaps=batch.raymaps[slot_perm],
        reference_mask=batch.reference_mask[slot_perm],
        drop_flags=batch.drop_flags[slot_perm],
        view_indices=tuple(batch.view_indices[i] for i in slot_perm),
        poses=tuple(batch.poses[i] for i in slot_perm),
    )
