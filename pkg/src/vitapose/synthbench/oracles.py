"""Brute-force reference implementations used only to validate the fast paths.

Everything here is written the slow, obvious way: full pairwise distance
matrices, python sets, exhaustive grid search. No shared kernels.
"""

from typing import Optional

import numpy as np

from ..feasibility import (
    ContactResult,
    FeasibilityReport,
    KinematicResult,
    PenetrationResult,
    Thresholds,
)
from ..geometry import DeltaPose, Pose
from ..refiner import RefinementConfig, total_energy
from ..scene import Scene


def _all_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)


def _patch(scene: Scene, pose: Pose, tactile_points: np.ndarray,
           contact_threshold: float) -> np.ndarray:
    posed = (pose.rotation @ scene.object_cloud.points.T).T + pose.translation
    dists = _all_distances(posed, tactile_points).min(axis=1)
    return np.flatnonzero(dists <= contact_threshold)


def oracle_feasibility(scene: Scene, pose: Pose,
                       thresholds: Thresholds = Thresholds()) -> FeasibilityReport:
    """Exhaustive re-derivation of the three feasibility checks."""
    posed = (pose.rotation @ scene.object_cloud.points.T).T + pose.translation

    if len(scene.tactile_cloud) == 0:
        contact = ContactResult(True, float("inf"))
    else:
        d = _all_distances(posed, scene.tactile_cloud.points)
        best = float(d.min())
        contact = ContactResult(best <= thresholds.contact_max_distance, best)

    size = scene.object_voxels.voxel_size
    centers = (scene.object_voxels.origin
               + (scene.object_voxels.indices.astype(np.float64) + 0.5) * size)
    posed_centers = (pose.rotation @ centers.T).T + pose.translation
    origin = posed_centers.min(axis=0)
    object_cells = {tuple(c) for c in np.floor((posed_centers - origin) / size).astype(np.int64)}
    robot_cells = {tuple(c) for c in
                   np.floor((scene.robot_cloud.points - origin) / size).astype(np.int64)}
    ratio = len(object_cells & robot_cells) / len(object_cells)
    penetration = PenetrationResult(ratio <= thresholds.penetration_max_overlap, ratio)

    previous = scene.previous
    patch_now = None
    if len(scene.tactile_cloud) > 0:
        patch_now = _patch(scene, pose, scene.tactile_cloud.points,
                           thresholds.contact_max_distance)
    if (previous is None or patch_now is None or len(patch_now) == 0
            or len(previous.patch_indices) == 0):
        kinematic = KinematicResult(True, 0.0, evaluated=False)
    else:
        centroid_now = scene.object_cloud.points[patch_now].mean(axis=0)
        centroid_prev = scene.object_cloud.points[previous.patch_indices].mean(axis=0)
        shift = float(np.linalg.norm(centroid_now - centroid_prev))
        kinematic = KinematicResult(shift <= thresholds.kinematic_max_shift, shift, evaluated=True)

    return FeasibilityReport(contact, penetration, kinematic)


def refinement_candidates(translation_range: float = 0.05,
                          translation_step: float = 0.005,
                          rotation_range: float = 0.2,
                          rotation_step: float = 0.02) -> list:
    """Zero, a dense translation grid, then per-axis rotation sweeps."""
    candidates = [DeltaPose.zero()]
    n_t = int(round(2 * translation_range / translation_step)) + 1
    axis_t = np.linspace(-translation_range, translation_range, n_t)
    for x in axis_t:
        for y in axis_t:
            for z in axis_t:
                candidates.append(DeltaPose(np.zeros(3), np.array([x, y, z])))
    n_r = int(round(2 * rotation_range / rotation_step)) + 1
    axis_r = np.linspace(-rotation_range, rotation_range, n_r)
    for axis in range(3):
        for angle in axis_r:
            w = np.zeros(3)
            w[axis] = angle
            candidates.append(DeltaPose(w, np.zeros(3)))
    return candidates


def oracle_refine(scene: Scene, visual_pose: Pose,
                  config: Optional[RefinementConfig] = None,
                  translation_range: float = 0.05,
                  translation_step: float = 0.005,
                  rotation_range: float = 0.2,
                  rotation_step: float = 0.02):
    """Grid search over pose corrections, scoring each with the exact energy.

    Returns (best_pose, best_delta, best_energy). Ties keep the earliest
    candidate, so a zero-energy optimum at zero correction returns the
    visual pose unchanged.
    """
    if config is None:
        config = RefinementConfig()
    best_delta = None
    best_energy = np.inf
    for delta in refinement_candidates(translation_range, translation_step,
                                       rotation_range, rotation_step):
        energy = total_energy(scene, visual_pose, delta, config).total
        if energy < best_energy:
            best_energy = energy
            best_delta = delta
    best_pose = best_delta.as_pose().compose(visual_pose)
    return best_pose, best_delta, float(best_energy)
