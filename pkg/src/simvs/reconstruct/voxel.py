"""Dense voxel radiance field: density + color grids over an axis-aligned box."""

from dataclasses import dataclass

import numpy as np

from ..harmonizer.checkpoint import load_container, save_container

DEFAULT_BOUNDS = ((-3.0, -3.0, 0.0), (3.0, 3.0, 3.0))


@dataclass
class VoxelRadianceField:
    density: np.ndarray     # (D,D,D) >= 0
    color: np.ndarray       # (D,D,D,3) in [0,1]
    bounds: np.ndarray      # (2,3) [min, max] world corners
    background: np.ndarray  # (3,) constant background color

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=np.float64)
        self.color = np.asarray(self.color, dtype=np.float64)
        self.bounds = np.asarray(self.bounds, dtype=np.float64).reshape(2, 3)
        self.background = np.asarray(self.background, dtype=np.float64).reshape(3)
        d = self.grid_size
        if self.density.shape != (d, d, d) or self.color.shape != (d, d, d, 3):
            raise ValueError("density must be (D,D,D) and color (D,D,D,3)")
        if not 32 <= d <= 128:
            raise ValueError("grid resolution D must lie in [32, 128]")
        if np.any(self.density < 0):
            raise ValueError("densities must be non-negative")

    @property
    def grid_size(self) -> int:
        return self.density.shape[0]

    @property
    def voxel_size(self) -> float:
        extent = self.bounds[1] - self.bounds[0]
        return float(np.max(extent) / (self.grid_size - 1))

    @classmethod
    def empty(cls, grid_size: int = 64, bounds=DEFAULT_BOUNDS,
              background=(0.5, 0.5, 0.5)) -> "VoxelRadianceField":
        d = grid_size
        return cls(
            density=np.zeros((d, d, d)),
            color=np.full((d, d, d, 3), 0.5),
            bounds=np.asarray(bounds),
            background=np.asarray(background, dtype=np.float64),
        )

    def save(self, path) -> None:
        save_container(
            path,
            "voxel_field",
            {"grid_size": self.grid_size},
            {
                "density": self.density,
                "color": self.color,
                "bounds": self.bounds,
                "background": self.background,
            },
        )

    @classmethod
    def load(cls, path) -> "VoxelRadianceField":
        kind, _, arrays = load_container(path)
        if kind != "voxel_field":
            raise ValueError("expected a voxel_field checkpoint, got %r" % kind)
        return cls(
            density=arrays["density"],
            color=arrays["color"],
            bounds=arrays["bounds"],
            background=arrays["background"],
        )
