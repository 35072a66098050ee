"""Densification: resample the generative model (or an oracle renderer) at
novel poses to grow a sparse consistent capture into a dense one.

The conditioning set per sampling pass is the reference view plus the 4
nearest (by camera-center distance) of the 7 other consistent views; up to
3 novel poses are generated per pass.
"""

import numpy as np

from ..harmonizer.batch import pack_generation_batch
from ..harmonizer.sampling import sample
from ..seeding import rng_for
from ..worldsim.render import render
from ..worldsim.scene import SceneState

CONDITIONING_SIZE = 4  # nearest views joining the reference
TARGETS_PER_PASS = 3
DEFAULT_EXTRA_POSES = 24


def nearest_conditioning_views(target_poses, candidate_poses, k: int = CONDITIONING_SIZE):
    """Indices of the k candidates nearest (camera center) to the target group."""
    target_center = np.mean([p.center() for p in target_poses], axis=0)
    dists = [float(np.linalg.norm(p.center() - target_center)) for p in candidate_poses]
    return list(np.argsort(dists, kind="stable")[:k])


class HarmonizerViewGenerator:
    """Uses a trained harmonization model as a pure view generator: novel
    target slots get zero inconsistent conditioning (drop flag raised)."""

    def __init__(self, model, schedule, codec, seed=0, n_steps=32):
        self.model = model
        self.schedule = schedule
        self.codec = codec
        self.seed = seed
        self.n_steps = n_steps
        self._call = 0

    def generate(self, reference, reference_pose, cond_images, cond_poses, target_poses):
        batch = pack_generation_batch(
            reference, reference_pose, cond_images, cond_poses, target_poses,
            codec=self.codec,
        )
        rng = rng_for(self.seed, "densify/%d" % self._call)
        self._call += 1
        images = sample(self.model, self.schedule, batch, rng,
                        codec=self.codec, n_steps=self.n_steps)
        k = len(cond_images)
        return images[k : k + len(target_poses)]


class OracleViewGenerator:
    """Ground-truth renderer backend (state 0 of a known scene)."""

    def __init__(self, scene):
        self.scene = scene
        self._identity = SceneState.identity(len(scene.objects))

    def generate(self, reference, reference_pose, cond_images, cond_poses, target_poses):
        return [render(self.scene, self._identity, p) for p in target_poses]


def densify(generator, views, extra_poses, group_size: int = TARGETS_PER_PASS):
    """Generate one image per extra pose.

    ``views`` is the consistent capture as a list of (image, pose) with the
    reference first.  Returns a list of (image, pose) for the extra poses.
    """
    if not extra_poses:
        return []
    reference, reference_pose = views[0]
    others = views[1:]
    out = []
    for start in range(0, len(extra_poses), group_size):
        group = list(extra_poses[start : start + group_size])
        sel = nearest_conditioning_views(group, [p for _, p in others])
        cond_images = [others[i][0] for i in sel]
        cond_poses = [others[i][1] for i in sel]
        images = generator.generate(reference, reference_pose, cond_images,
                                    cond_poses, group)
        out.extend(zip(images, group))
    return [(img, pose) for img, pose in out]
