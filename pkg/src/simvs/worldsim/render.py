"""Backend dispatch and scene packing for the ray-cast renderer."""

import math

import numpy as np

from .. import backend
from ..camera import CameraPose, pixel_directions, validate_pose
from ..errors import DegenerateViewError
from .scene import SceneSpec, SceneState, apply_state, validate_scene


def light_direction(azimuth: float, elevation: float) -> np.ndarray:
    """Unit vector pointing from the scene toward the light."""
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def pack_scene(scene: SceneSpec):
    """Flatten a scene into the primitive arrays the kernels consume."""
    spheres = []
    sphere_ids = []
    boxes = []
    box_ids = []
    for idx, obj in enumerate(scene.objects):
        if obj.kind == "sphere":
            spheres.append(
                [*obj.center, obj.half_extents[0], *obj.albedo]
            )
            sphere_ids.append(idx)
        else:
            boxes.append([*obj.center, *obj.half_extents, obj.yaw, *obj.albedo])
            box_ids.append(idx)
    spheres = np.array(spheres, dtype=np.float64).reshape(-1, 7)
    boxes = np.array(boxes, dtype=np.float64).reshape(-1, 10)
    g = scene.ground
    ground = np.array(
        [g.half_extent, g.cell_size, *g.color_a, *g.color_b, g.noise_amp],
        dtype=np.float64,
    )
    ground_seed = np.uint64(scene.rng_seed & (2**64 - 1))
    light = np.array(
        [*light_direction(scene.light.azimuth, scene.light.elevation),
         scene.light.intensity, scene.ambient],
        dtype=np.float64,
    )
    sky = np.asarray(scene.sky_color, dtype=np.float64)
    return (
        spheres,
        np.array(sphere_ids, dtype=np.int32),
        boxes,
        np.array(box_ids, dtype=np.int32),
        ground,
        ground_seed,
        light,
        sky,
    )


def _camera_inside(scene: SceneSpec, center: np.ndarray) -> bool:
    for obj in scene.objects:
        p = center - obj.center
        if obj.kind == "sphere":
            if np.dot(p, p) <= obj.half_extents[0] ** 2:
                return True
        else:
            c, s = math.cos(obj.yaw), math.sin(obj.yaw)
            local = np.array([c * p[0] + s * p[1], -s * p[0] + c * p[1], p[2]])
            if np.all(np.abs(local) <= obj.half_extents):
                return True
    return False


def _kernel():
    if backend.use_numba():
        from . import _kernels_numba as impl
    else:
        from . import _kernels_numpy as impl
    return impl.render_pixels


def render_aux(scene: SceneSpec, state: SceneState, pose: CameraPose):
    """Render and also return the per-pixel hit ids and ray distances.

    hit id: -1 sky, 0 ground, k >= 1 for scene object k-1.
    """
    validate_scene(scene)
    validate_pose(pose)
    world = apply_state(scene, state)
    if _camera_inside(world, pose.center()):
        raise DegenerateViewError("camera center lies inside a scene object")
    h, w = pose.resolution
    dirs = pixel_directions(pose).reshape(-1, 3)
    packed = pack_scene(world)
    rgb, hit_id, tdist = _kernel()(np.ascontiguousarray(pose.center()), dirs, *packed)
    return (
        rgb.reshape(h, w, 3),
        hit_id.reshape(h, w),
        tdist.reshape(h, w),
    )


def render(scene: SceneSpec, state: SceneState, pose: CameraPose) -> np.ndarray:
    """Deterministic Lambertian render with hard shadows, HxWx3 in [0,1]."""
    return render_aux(scene, state, pose)[0]


def silhouette_mask(hit_id: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels covered by any scene object."""
    return hit_id >= 1
