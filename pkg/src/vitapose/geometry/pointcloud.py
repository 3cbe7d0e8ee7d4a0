"""Point clouds and nearest-neighbor queries."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import kernels
from ..errors import InvalidArgumentError
from .pose import Pose

NORMAL_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class PointCloud:
    """Points in a common frame, optionally with unit normals.

    May be empty (a tactile cloud with no activated taxels is legitimate);
    operations that need points raise InvalidArgumentError instead.
    """

    points: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidArgumentError(f"points must be (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("points must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.ascontiguousarray(self.normals, dtype=np.float64)
            if nrm.shape != pts.shape:
                raise InvalidArgumentError("normals must match points shape")
            lengths = np.linalg.norm(nrm, axis=1)
            if len(nrm) and not np.allclose(lengths, 1.0, atol=NORMAL_UNIT_TOL):
                raise InvalidArgumentError("normals must be unit length")
            nrm.flags.writeable = False
            object.__setattr__(self, "normals", nrm)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)))


def transform_points(pose: Pose, cloud: PointCloud) -> PointCloud:
    """Cloud mapped into the pose's target frame; normals rotate only."""
    normals = pose.rotate(cloud.normals) if cloud.normals is not None else None
    return PointCloud(pose.apply(cloud.points), normals)


def nearest_neighbor(query: np.ndarray, cloud: PointCloud) -> tuple:
    """(index, distance) of the cloud point closest to `query`.

    Ties resolve to the lowest index.
    """
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (3,):
        raise InvalidArgumentError(f"query must have shape (3,), got {q.shape}")
    if len(cloud) == 0:
        raise InvalidArgumentError("nearest_neighbor on an empty cloud")
    idx, sq = kernels.nearest_neighbors(q[None, :], cloud.points)
    return int(idx[0]), float(np.sqrt(sq[0]))
