"""Point-to-point ICP baseline: align the posed object cloud to the taxels."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError
from .geometry import Pose
from .scene import Scene


@dataclass(frozen=True)
class IcpConfig:
    max_correspondence_distance: float = 0.1
    convergence_tol: float = 1e-6  # on the change in RMS residual
    max_iterations: int = 50

    def __post_init__(self):
        if self.max_correspondence_distance <= 0 or self.convergence_tol <= 0 \
                or self.max_iterations < 1:
            raise InvalidArgumentError("bad ICP config")


@dataclass(frozen=True)
class IcpResult:
    refined_pose: Pose
    iterations: int
    final_rms: float
    vacuous: bool = False  # no tactile points; visual pose passed through
    translation_only: bool = False  # too few target points to observe rotation
    degenerate: bool = False  # correspondences fell below the minimum mid-run
    converged: bool = False


def procrustes_fit(source: np.ndarray, target: np.ndarray) -> Pose:
    """Least-squares rigid transform mapping source onto target (paired rows).

    SVD of the cross-covariance with a reflection correction, so the result
    is always a proper rotation.
    """
    src = np.asarray(source, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3 or src.shape[0] < 3:
        raise InvalidArgumentError("procrustes_fit needs matching (n>=3, 3) arrays")
    src_mean = src.mean(axis=0)
    tgt_mean = tgt.mean(axis=0)
    h = (src - src_mean).T @ (tgt - tgt_mean)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    flip = np.diag([1.0, 1.0, d if d != 0 else 1.0])
    rotation = vt.T @ flip @ u.T
    return Pose(rotation, tgt_mean - rotation @ src_mean)


def icp_refine(scene: Scene, visual_pose: Pose,
               config: IcpConfig = IcpConfig()) -> IcpResult:
    """Iteratively match posed object points to taxels and solve in closed form.

    With fewer than 3 tactile points rotation is unobservable, so only the
    matched centroid shift is applied (flagged translation_only). An empty
    tactile cloud returns the visual pose, flagged vacuous.
    """
    target = scene.tactile_cloud.points
    if target.shape[0] == 0:
        return IcpResult(refined_pose=visual_pose, iterations=0, final_rms=math.inf,
                         vacuous=True)
    translation_only = target.shape[0] < 3
    min_matches = 1 if translation_only else 3

    src = visual_pose.apply(scene.object_cloud.points)
    cumulative = Pose.identity()
    prev_rms = None
    rms = math.inf
    steps = 0
    converged = False
    degenerate = False

    for _ in range(config.max_iterations):
        nn, sq = kernels.nearest_neighbors(src, target)
        dist = np.sqrt(sq)
        mask = dist <= config.max_correspondence_distance
        if int(mask.sum()) < min_matches:
            degenerate = True
            break
        rms = float(np.sqrt(np.mean(sq[mask])))
        if prev_rms is not None and abs(prev_rms - rms) < config.convergence_tol:
            converged = True
            break
        prev_rms = rms
        matched_src = src[mask]
        matched_tgt = target[nn[mask]]
        if translation_only:
            step = Pose(np.eye(3), matched_tgt.mean(axis=0) - matched_src.mean(axis=0))
        else:
            step = procrustes_fit(matched_src, matched_tgt)
        src = step.apply(src)
        cumulative = step.compose(cumulative)
        steps += 1

    return IcpResult(refined_pose=cumulative.compose(visual_pose),
                     iterations=steps, final_rms=rms,
                     translation_only=translation_only,
                     degenerate=degenerate, converged=converged)
