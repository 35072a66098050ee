"""Densification and voxel radiance-field reconstruction."""

from .voxel import VoxelRadianceField  # noqa: F401
from .volume import render_field, render_rays  # noqa: F401
from .fit import FitConfig, fit_field  # noqa: F401
from .densify import densify, nearest_conditioning_views  # noqa: F401
