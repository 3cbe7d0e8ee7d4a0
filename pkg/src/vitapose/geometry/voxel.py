"""Occupancy voxelization of point clouds."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import InvalidArgumentError

DEFAULT_VOXEL_SIZE = 0.005


def _point_indices(points: np.ndarray, origin: np.ndarray, voxel_size: float) -> np.ndarray:
    return np.floor((points - origin) / voxel_size).astype(np.int64)


@dataclass(frozen=True)
class VoxelGrid:
    """Axis-aligned occupancy grid: origin, edge length, occupied cells."""

    origin: np.ndarray
    voxel_size: float
    indices: np.ndarray  # (k, 3) int64, unique rows in lexicographic order

    def __post_init__(self):
        origin = np.array(self.origin, dtype=np.float64)
        idx = np.array(self.indices, dtype=np.int64)
        if origin.shape != (3,) or idx.ndim != 2 or idx.shape[1] != 3:
            raise InvalidArgumentError("bad voxel grid shapes")
        if self.voxel_size <= 0:
            raise InvalidArgumentError("voxel_size must be positive")
        if idx.shape[0] == 0:
            raise InvalidArgumentError("voxel grid must have occupied cells")
        origin.flags.writeable = False
        idx.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "indices", idx)

    @property
    def occupied_count(self) -> int:
        return self.indices.shape[0]

    @cached_property
    def _index_set(self) -> frozenset:
        return frozenset(map(tuple, self.indices.tolist()))

    def centers(self) -> np.ndarray:
        """World-frame centers of the occupied cells."""
        return self.origin + (self.indices.astype(np.float64) + 0.5) * self.voxel_size

    def point_index(self, point: np.ndarray) -> tuple:
        idx = _point_indices(np.asarray(point, dtype=np.float64)[None, :],
                             self.origin, self.voxel_size)[0]
        return tuple(int(i) for i in idx)

    def contains_point(self, point: np.ndarray) -> bool:
        """True if the point falls inside an occupied cell."""
        return self.point_index(point) in self._index_set


def voxelize(points: np.ndarray, voxel_size: float = DEFAULT_VOXEL_SIZE) -> VoxelGrid:
    """Occupancy grid of a cloud; origin is the componentwise minimum.

    Cell index of a point is floor((p - origin) / voxel_size), so every
    input point lands inside an occupied cell.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise InvalidArgumentError(f"voxelize needs a non-empty (n, 3) array, got {pts.shape}")
    if voxel_size <= 0:
        raise InvalidArgumentError("voxel_size must be positive")
    origin = pts.min(axis=0)
    idx = np.unique(_point_indices(pts, origin, voxel_size), axis=0)
    return VoxelGrid(origin, float(voxel_size), idx)
