"""Pinhole camera poses, projection, and per-pixel raymap encoding.

Conventions (used everywhere in this package):
  - world frame is right-handed with +z up; the ground plane is z = 0
  - camera frame: x right, y down, z forward (the camera looks down +z)
  - image frame: u right (column index), v down (row index), in pixels;
    pixel (row i, col j) samples the continuous point (u=j, v=i)
  - ``rotation`` is world-from-camera: X_world = R @ X_cam + t, so the
    camera center in world coordinates is ``translation``
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPoseError

_ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class CameraPose:
    """Intrinsics plus world-from-camera extrinsics for one view."""

    rotation: np.ndarray        # (3,3) orthonormal, det +1
    translation: np.ndarray     # (3,) camera center in world units
    focal: float                # pixels
    principal_point: np.ndarray  # (2,) (cx, cy) pixels
    resolution: tuple           # (height, width) pixels

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        pp = np.asarray(self.principal_point, dtype=np.float64).reshape(2)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "principal_point", pp)
        object.__setattr__(self, "focal", float(self.focal))
        h, w = self.resolution
        object.__setattr__(self, "resolution", (int(h), int(w)))
        validate_pose(self)

    @property
    def height(self) -> int:
        return self.resolution[0]

    @property
    def width(self) -> int:
        return self.resolution[1]

    def center(self) -> np.ndarray:
        return self.translation


@dataclass(frozen=True)
class Raymap:
    """Per-pixel 6-channel camera encoding: world ray origins + unit directions."""

    origins: np.ndarray      # (H,W,3)
    directions: np.ndarray   # (H,W,3), unit norm

    def __post_init__(self):
        o = np.asarray(self.origins, dtype=np.float64)
        d = np.asarray(self.directions, dtype=np.float64)
        if o.shape != d.shape or o.ndim != 3 or o.shape[2] != 3:
            raise ValueError("origins/directions must both be HxWx3")
        object.__setattr__(self, "origins", o)
        object.__setattr__(self, "directions", d)
        norms = np.linalg.norm(d, axis=-1)
        if not np.allclose(norms, 1.0, atol=_ORTHO_TOL):
            raise ValueError("ray directions must have unit norm")
        if not np.allclose(o, o[0, 0], atol=_ORTHO_TOL):
            raise ValueError("pinhole raymap must share a single origin")

    def as_channels(self) -> np.ndarray:
        """Stack to an (H,W,6) array: 3 origin channels then 3 direction channels."""
        return np.concatenate([self.origins, self.directions], axis=-1)


def validate_pose(pose: CameraPose) -> None:
    R = pose.rotation
    if not np.all(np.abs(R.T @ R - np.eye(3)) <= _ORTHO_TOL):
        raise InvalidPoseError("rotation is not orthonormal within 1e-6")
    if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
        raise InvalidPoseError("rotation must have determinant +1")
    if not pose.focal > 0:
        raise InvalidPoseError("focal length must be positive")
    h, w = pose.resolution
    if h < 8 or w < 8:
        raise InvalidPoseError("resolution components must be >= 8")


def project(pose: CameraPose, point: np.ndarray):
    """Pinhole projection of a world point.

    Returns ``(uv, depth)`` where depth is the camera-frame z coordinate.
    ``depth <= 0`` signals a point behind (or in the plane of) the camera;
    uv is NaN in that case.  A point at the camera center raises ValueError.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    x_cam = pose.rotation.T @ (p - pose.translation)
    depth = float(x_cam[2])
    if np.allclose(p, pose.translation, atol=1e-12):
        raise ValueError("cannot project the camera center")
    if depth <= 0.0:
        return np.array([np.nan, np.nan]), depth
    uv = pose.focal * x_cam[:2] / depth + pose.principal_point
    return uv, depth


def pixel_directions(pose: CameraPose) -> np.ndarray:
    """World-space unit ray directions for every pixel, shape (H,W,3)."""
    h, w = pose.resolution
    u = np.arange(w, dtype=np.float64)[None, :]
    v = np.arange(h, dtype=np.float64)[:, None]
    cx, cy = pose.principal_point
    dirs_cam = np.empty((h, w, 3), dtype=np.float64)
    dirs_cam[..., 0] = (u - cx) / pose.focal
    dirs_cam[..., 1] = (v - cy) / pose.focal
    dirs_cam[..., 2] = 1.0
    dirs_world = dirs_cam @ pose.rotation.T
    dirs_world /= np.linalg.norm(dirs_world, axis=-1, keepdims=True)
    return dirs_world


def raymap_from_pose(pose: CameraPose) -> Raymap:
    """Raymap with one ray per pixel center; origins are the camera center."""
    validate_pose(pose)
    h, w = pose.resolution
    origins = np.broadcast_to(pose.translation, (h, w, 3)).copy()
    return Raymap(origins=origins, directions=pixel_directions(pose))


def transform_pose(pose: CameraPose, rot: np.ndarray, trans: np.ndarray) -> CameraPose:
    """Apply a rigid world transform (R0, t0) to the pose."""
    rot = np.asarray(rot, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    return CameraPose(
        rotation=rot @ pose.rotation,
        translation=rot @ pose.translation + trans,
        focal=pose.focal,
        principal_point=pose.principal_point,
        resolution=pose.resolution,
    )


def transform_raymap(raymap: Raymap, rot: np.ndarray, trans: np.ndarray) -> Raymap:
    """Apply the same rigid world transform to a raymap's rays."""
    rot = np.asarray(rot, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    return Raymap(
        origins=raymap.origins @ rot.T + trans,
        directions=raymap.directions @ rot.T,
    )


def look_at(eye, target, focal: float, resolution, principal_point=None) -> CameraPose:
    """Pose at ``eye`` looking at ``target`` with image-up opposite world +z."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    n = np.linalg.norm(forward)
    if n < 1e-12:
        raise ValueError("eye and target coincide")
    z_cam = forward / n
    world_up = np.array([0.0, 0.0, 1.0])
    y_cam = -(world_up - np.dot(world_up, z_cam) * z_cam)
    ny = np.linalg.norm(y_cam)
    if ny < 1e-9:
        # Looking straight up/down: pick an arbitrary stable image-down axis.
        y_cam = np.array([0.0, 1.0, 0.0])
        y_cam = y_cam - np.dot(y_cam, z_cam) * z_cam
        ny = np.linalg.norm(y_cam)
    y_cam /= ny
    x_cam = np.cross(y_cam, z_cam)
    R = np.stack([x_cam, y_cam, z_cam], axis=1)
    h, w = resolution
    if principal_point is None:
        principal_point = np.array([w / 2.0, h / 2.0])
    return CameraPose(
        rotation=R,
        translation=eye,
        focal=focal,
        principal_point=principal_point,
        resolution=(h, w),
    )


def scale_pose(pose: CameraPose, factor: int) -> CameraPose:
    """Pose for the image downsampled by an integer factor (for latent-space raymaps)."""
    if factor == 1:
        return pose
    h, w = pose.resolution
    if h % factor or w % factor:
        raise ValueError("resolution not divisible by factor %d" % factor)
    # Pixel (i,j) at the coarse scale covers fine pixels [i*f, (i+1)*f); its
    # center maps to fine coordinate i*f + (f-1)/2.
    f = float(factor)
    return CameraPose(
        rotation=pose.rotation,
        translation=pose.translation,
        focal=pose.focal / f,
        principal_point=(pose.principal_point - (f - 1.0) / 2.0) / f,
        resolution=(h // factor, w // factor),
    )


def pose_to_json_dict(pose: CameraPose) -> dict:
    """Serialize for the scene manifest (row-major rotation)."""
    return {
        "rotation": [float(x) for x in pose.rotation.reshape(-1)],
        "translation": [float(x) for x in pose.translation],
        "focal": float(pose.focal),
        "principal_point": [float(x) for x in pose.principal_point],
        "resolution": [int(pose.resolution[0]), int(pose.resolution[1])],
    }


def pose_from_json_dict(d: dict) -> CameraPose:
    return CameraPose(
        rotation=np.array(d["rotation"], dtype=np.float64).reshape(3, 3),
        translation=np.array(d["translation"], dtype=np.float64),
        focal=float(d["focal"]),
        principal_point=np.array(d["principal_point"], dtype=np.float64),
        resolution=(int(d["resolution"][0]), int(d["resolution"][1])),
    )
