"""Volume rendering entry points (backend dispatch)."""

import numpy as np

from .. import backend
from ..camera import CameraPose, pixel_directions
from .voxel import VoxelRadianceField

DEFAULT_SAMPLES_PER_RAY = 128


def _impl():
    if backend.use_numba():
        from . import _vr_numba as impl
    else:
        from . import _vr_numpy as impl
    return impl


def far_sentinel(field: VoxelRadianceField, origin: np.ndarray) -> float:
    """Per-render depth sentinel: box-center distance plus the box diagonal."""
    center = field.bounds.mean(axis=0)
    diag = float(np.linalg.norm(field.bounds[1] - field.bounds[0]))
    return float(np.linalg.norm(origin - center) + diag)


def render_rays(field: VoxelRadianceField, rays_o: np.ndarray, rays_d: np.ndarray,
                n_samples: int = DEFAULT_SAMPLES_PER_RAY, far: float = None):
    """Returns (rgb (N,3), depth (N,), weight_sum (N,))."""
    if far is None:
        far = far_sentinel(field, rays_o[0])
    impl = _impl()
    return impl.vr_forward(
        np.ascontiguousarray(rays_o, dtype=np.float64),
        np.ascontiguousarray(rays_d, dtype=np.float64),
        field.density, field.color,
        field.bounds[0], field.bounds[1],
        n_samples, field.background, far,
    )


def render_rays_backward(field, rays_o, rays_d, drgb, grad_density, grad_color,
                         grad_bg, n_samples: int = DEFAULT_SAMPLES_PER_RAY,
                         far: float = None):
    if far is None:
        far = far_sentinel(field, rays_o[0])
    impl = _impl()
    impl.vr_backward(
        np.ascontiguousarray(rays_o, dtype=np.float64),
        np.ascontiguousarray(rays_d, dtype=np.float64),
        field.density, field.color,
        field.bounds[0], field.bounds[1],
        n_samples, field.background, far,
        np.ascontiguousarray(drgb, dtype=np.float64),
        grad_density, grad_color, grad_bg,
    )


def render_field(field: VoxelRadianceField, pose: CameraPose,
                 n_samples: int = DEFAULT_SAMPLES_PER_RAY):
    """Render an image and expected-termination depth map for one pose."""
    h, w = pose.resolution
    dirs = pixel_directions(pose).reshape(-1, 3)
    origins = np.broadcast_to(pose.center(), dirs.shape)
    rgb, depth, _ = render_rays(field, origins, dirs, n_samples=n_samples)
    return (
        np.clip(rgb.reshape(h, w, 3), 0.0, 1.0),
        depth.reshape(h, w),
    )
