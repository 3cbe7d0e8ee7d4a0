"""Feasibility checks of a pose estimate against touch and proprioception.

Three independent constraints: activated taxels must be near the posed
object surface (contact), the gripper must not overlap the object's
occupancy volume beyond a tolerated ratio (penetration), and the contact
patch must stay put on the object between frames (kinematic consistency).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import InvalidArgumentError
from .geometry import PointCloud, Pose, VoxelGrid
from .geometry.voxel import _point_indices
from .scene import Scene, contact_patch

DEFAULT_CONTACT_MAX_DISTANCE = 0.05
DEFAULT_PENETRATION_MAX_OVERLAP = 0.008
DEFAULT_KINEMATIC_MAX_SHIFT = 0.03


@dataclass(frozen=True)
class Thresholds:
    contact_max_distance: float = DEFAULT_CONTACT_MAX_DISTANCE
    penetration_max_overlap: float = DEFAULT_PENETRATION_MAX_OVERLAP
    kinematic_max_shift: float = DEFAULT_KINEMATIC_MAX_SHIFT

    def __post_init__(self):
        if min(self.contact_max_distance, self.penetration_max_overlap,
               self.kinematic_max_shift) <= 0:
            raise InvalidArgumentError("thresholds must be positive")

    def to_dict(self) -> dict:
        return {"contact_max_distance": self.contact_max_distance,
                "penetration_max_overlap": self.penetration_max_overlap,
                "kinematic_max_shift": self.kinematic_max_shift}

    @classmethod
    def from_dict(cls, data: dict) -> "Thresholds":
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class ContactResult:
    passed: bool
    min_distance: float  # +inf when no taxel is activated (vacuous pass)


@dataclass(frozen=True)
class PenetrationResult:
    passed: bool
    overlap_ratio: float


@dataclass(frozen=True)
class KinematicResult:
    passed: bool
    displacement: float
    evaluated: bool  # False without a previous frame or with an empty patch


@dataclass(frozen=True)
class FeasibilityReport:
    contact: ContactResult
    penetration: PenetrationResult
    kinematic: KinematicResult

    @property
    def overall_pass(self) -> bool:
        return (self.contact.passed and self.penetration.passed
                and (self.kinematic.passed or not self.kinematic.evaluated))

    def to_dict(self) -> dict:
        return {
            "contact": {"passed": self.contact.passed,
                        "min_distance": self.contact.min_distance},
            "penetration": {"passed": self.penetration.passed,
                            "overlap_ratio": self.penetration.overlap_ratio},
            "kinematic": {"passed": self.kinematic.passed,
                          "displacement": self.kinematic.displacement,
                          "evaluated": self.kinematic.evaluated},
            "overall_pass": self.overall_pass,
        }


def check_contact(pose: Pose, object_cloud: PointCloud, tactile_cloud: PointCloud,
                  max_distance: float = DEFAULT_CONTACT_MAX_DISTANCE) -> ContactResult:
    """Closest posed-object point must lie within max_distance of a taxel.

    No activated taxels means no evidence against the pose: vacuous pass
    with a +inf sentinel (never 0, so logs can tell the two apart).
    """
    if len(object_cloud) == 0:
        raise InvalidArgumentError("contact check needs a non-empty object cloud")
    if len(tactile_cloud) == 0:
        return ContactResult(passed=True, min_distance=math.inf)
    posed = pose.apply(object_cloud.points)
    _, _, sq = kernels.min_pair(posed, tactile_cloud.points)
    dist = float(np.sqrt(sq))
    return ContactResult(passed=dist <= max_distance, min_distance=dist)


def check_penetration(pose: Pose, object_voxels: VoxelGrid, robot_cloud: PointCloud,
                      max_overlap: float = DEFAULT_PENETRATION_MAX_OVERLAP) -> PenetrationResult:
    """Fraction of posed object voxels that also hold a robot point.

    Occupied voxel centers are mapped through the pose and re-indexed into a
    fresh axis-aligned grid of the same cell size; robot points index into
    that grid directly.
    """
    if len(robot_cloud) == 0:
        raise InvalidArgumentError("penetration check needs a non-empty robot cloud")
    posed_centers = pose.apply(object_voxels.centers())
    origin = posed_centers.min(axis=0)
    size = object_voxels.voxel_size
    object_cells = set(map(tuple, _point_indices(posed_centers, origin, size).tolist()))
    robot_cells = set(map(tuple, _point_indices(robot_cloud.points, origin, size).tolist()))
    ratio = len(object_cells & robot_cells) / len(object_cells)
    return PenetrationResult(passed=ratio <= max_overlap, overlap_ratio=ratio)


def check_kinematic(patch_now: Optional[np.ndarray], patch_prev: Optional[np.ndarray],
                    object_cloud: PointCloud,
                    max_shift: float = DEFAULT_KINEMATIC_MAX_SHIFT) -> KinematicResult:
    """Contact-patch centroid must not jump across the object's own surface.

    Centroids are taken over the model-frame cloud, so the measure is how far
    the patch moved on the object, independent of where the object is.
    """
    if patch_now is None or patch_prev is None or len(patch_now) == 0 or len(patch_prev) == 0:
        return KinematicResult(passed=True, displacement=0.0, evaluated=False)
    points = object_cloud.points
    now = points[np.asarray(patch_now, dtype=np.int64)].mean(axis=0)
    prev = points[np.asarray(patch_prev, dtype=np.int64)].mean(axis=0)
    displacement = float(np.linalg.norm(now - prev))
    return KinematicResult(passed=displacement <= max_shift,
                           displacement=displacement, evaluated=True)


def check_all(scene: Scene, pose: Pose,
              thresholds: Thresholds = Thresholds()) -> FeasibilityReport:
    """Run all three checks for one pose estimate against one scene."""
    contact = check_contact(pose, scene.object_cloud, scene.tactile_cloud,
                            thresholds.contact_max_distance)
    penetration = check_penetration(pose, scene.object_voxels, scene.robot_cloud,
                                    thresholds.penetration_max_overlap)
    patch_now = contact_patch(scene.object_cloud, pose, scene.tactile_cloud,
                              thresholds.contact_max_distance)
    patch_prev = scene.previous.patch_indices if scene.previous is not None else None
    kinematic = check_kinematic(patch_now, patch_prev, scene.object_cloud,
                                thresholds.kinematic_max_shift)
    return FeasibilityReport(contact=contact, penetration=penetration, kinematic=kinematic)
