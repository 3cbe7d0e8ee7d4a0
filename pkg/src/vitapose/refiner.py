"""Test-time pose refinement as spring-energy minimization.

A small correction transform (rotation vector + translation) is optimized on
top of the visual pose estimate: an attractive spring closes the gap between
the posed object surface and the activated taxels, a one-sided repulsive
term fires when the object overlaps the gripper, and an L2 term keeps the
correction small. Nearest-neighbor correspondence indices are frozen within
each gradient evaluation and re-established every iteration.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, NumericFailure
from .geometry import DeltaPose, PointCloud, Pose, exp_map, right_jacobian
from .scene import Scene


@dataclass(frozen=True)
class RefinementConfig:
    k_attract: float = 1.0
    k_repulse: float = 1000.0
    l2_weight: float = 1000.0
    learning_rate: float = 1e-3
    iterations: int = 10
    # Experimentation flags: one spring per activated taxel instead of the
    # single globally closest pair, and a per-robot-point hinge instead of a
    # hinge on the mean signed depth. hinge_margin shifts the hinge threshold
    # so grazing contact at the pad standoff stays unpenalized.
    per_taxel_springs: bool = False
    per_point_hinge: bool = False
    hinge_margin: float = 0.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.k_attract < 0 or self.k_repulse < 0 or self.l2_weight < 0:
            raise InvalidArgumentError("energy weights must be non-negative")
        if self.learning_rate <= 0:
            raise InvalidArgumentError("learning_rate must be positive")
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be at least 1")
        if self.hinge_margin < 0:
            raise InvalidArgumentError("hinge_margin must be non-negative")

    def to_dict(self) -> dict:
        return {"k_attract": self.k_attract, "k_repulse": self.k_repulse,
                "l2_weight": self.l2_weight, "learning_rate": self.learning_rate,
                "iterations": self.iterations,
                "per_taxel_springs": self.per_taxel_springs,
                "per_point_hinge": self.per_point_hinge,
                "hinge_margin": self.hinge_margin,
                "adam_beta1": self.adam_beta1, "adam_beta2": self.adam_beta2,
                "adam_epsilon": self.adam_epsilon}

    @classmethod
    def from_dict(cls, data: dict) -> "RefinementConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown refinement config fields: {sorted(unknown)}")
        return replace(cls(), **data)


@dataclass(frozen=True)
class EnergyBreakdown:
    attractive: float
    repulsive: float
    regularization: float

    @property
    def total(self) -> float:
        return self.attractive + self.repulsive + self.regularization

    def to_dict(self) -> dict:
        return {"attractive": self.attractive, "repulsive": self.repulsive,
                "regularization": self.regularization, "total": self.total}


@dataclass(frozen=True)
class TraceEntry:
    delta: DeltaPose
    energy: EnergyBreakdown
    gradient_norm: float


@dataclass(frozen=True)
class RefinementTrace:
    entries: tuple

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {"entries": [{"delta": e.delta.to_dict(), "energy": e.energy.to_dict(),
                             "gradient_norm": e.gradient_norm} for e in self.entries]}


@dataclass(frozen=True)
class RefinementResult:
    refined_pose: Pose
    delta: DeltaPose
    initial_energy: EnergyBreakdown
    final_energy: EnergyBreakdown
    trace: RefinementTrace


@dataclass(frozen=True)
class RefinementProblem:
    """Scene geometry pre-posed by the visual estimate, ready for deltas."""

    base_points: np.ndarray  # object cloud mapped by the visual pose
    base_normals: np.ndarray  # object normals rotated by the visual pose
    tactile_points: np.ndarray
    robot_points: np.ndarray

    @classmethod
    def from_clouds(cls, base_pose: Pose, object_cloud: PointCloud,
                    tactile_cloud: PointCloud, robot_cloud: PointCloud) -> "RefinementProblem":
        if len(object_cloud) == 0:
            raise InvalidArgumentError("refinement needs a non-empty object cloud")
        if object_cloud.normals is None:
            raise InvalidArgumentError("refinement needs object normals")
        return cls(base_points=base_pose.apply(object_cloud.points),
                   base_normals=base_pose.rotate(object_cloud.normals),
                   tactile_points=tactile_cloud.points,
                   robot_points=robot_cloud.points)

    @classmethod
    def from_scene(cls, scene: Scene, visual_pose: Pose) -> "RefinementProblem":
        return cls.from_clouds(visual_pose, scene.object_cloud,
                               scene.tactile_cloud, scene.robot_cloud)


@dataclass(frozen=True)
class Correspondences:
    """Frozen nearest-neighbor index assignments for one gradient evaluation."""

    attract_pairs: np.ndarray  # (k, 2) int64 rows of (object index, tactile index)
    repulse_nn: np.ndarray  # (r,) int64 object index nearest to each robot point


def _posed(problem: RefinementProblem, rotation: np.ndarray, translation: np.ndarray):
    return problem.base_points @ rotation.T + translation


def correspondences(problem: RefinementProblem, delta: DeltaPose,
                    config: RefinementConfig) -> Correspondences:
    """Establish nearest-neighbor assignments at the current delta."""
    rotation = exp_map(delta.rotation_vector)
    posed = _posed(problem, rotation, delta.translation)
    m = problem.tactile_points.shape[0]
    if m == 0:
        pairs = np.zeros((0, 2), dtype=np.int64)
    elif config.per_taxel_springs:
        obj_idx, _ = kernels.nearest_neighbors(problem.tactile_points, posed)
        pairs = np.stack([obj_idx, np.arange(m, dtype=np.int64)], axis=1)
    else:
        i, j, _ = kernels.min_pair(posed, problem.tactile_points)
        pairs = np.array([[i, j]], dtype=np.int64)
    if problem.robot_points.shape[0] == 0:
        raise InvalidArgumentError("refinement needs a non-empty robot cloud")
    nn, _ = kernels.nearest_neighbors(problem.robot_points, posed)
    return Correspondences(attract_pairs=pairs, repulse_nn=nn)


def _signed_depths(problem: RefinementProblem, corr: Correspondences,
                   rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """Per-robot-point signed depth: positive inside the object surface."""
    posed = _posed(problem, rotation, translation)
    matched = posed[corr.repulse_nn]
    normals = problem.base_normals[corr.repulse_nn] @ rotation.T
    return np.sum((matched - problem.robot_points) * normals, axis=1)


def energy_given(problem: RefinementProblem, delta: DeltaPose, corr: Correspondences,
                 config: RefinementConfig) -> EnergyBreakdown:
    """Total energy with correspondence indices held fixed."""
    rotation = exp_map(delta.rotation_vector)
    translation = delta.translation
    attractive = 0.0
    if corr.attract_pairs.shape[0]:
        posed = _posed(problem, rotation, translation)
        diffs = posed[corr.attract_pairs[:, 0]] - problem.tactile_points[corr.attract_pairs[:, 1]]
        attractive = 0.5 * config.k_attract * float(np.sum(diffs * diffs))
    depths = _signed_depths(problem, corr, rotation, translation)
    if config.per_point_hinge:
        hinge = np.maximum(depths - config.hinge_margin, 0.0)
        repulsive = 0.5 * config.k_repulse * float(np.mean(hinge * hinge))
    else:
        depth = max(float(np.mean(depths)) - config.hinge_margin, 0.0)
        repulsive = 0.5 * config.k_repulse * depth * depth
    w = delta.rotation_vector
    t = translation
    regularization = config.l2_weight * (float(w @ w) + float(t @ t))
    return EnergyBreakdown(attractive, repulsive, regularization)


def gradient_given(problem: RefinementProblem, delta: DeltaPose, corr: Correspondences,
                   config: RefinementConfig) -> np.ndarray:
    """Analytic gradient of the index-frozen energy w.r.t. the 6-vector.

    The rotation block uses the exact differential of the exponential map:
    d(R(w) q)/dw = -R [q]x J_r(w), which contributes J_r^T (q x R^T v) for a
    downstream vector v.
    """
    rotation = exp_map(delta.rotation_vector)
    translation = delta.translation
    jr = right_jacobian(delta.rotation_vector)
    grad_w = np.zeros(3)
    grad_t = np.zeros(3)

    if corr.attract_pairs.shape[0]:
        q = problem.base_points[corr.attract_pairs[:, 0]]
        s = problem.tactile_points[corr.attract_pairs[:, 1]]
        diffs = q @ rotation.T + translation - s
        grad_t += config.k_attract * diffs.sum(axis=0)
        back = diffs @ rotation  # row-wise R^T d
        grad_w += config.k_attract * (jr.T @ np.cross(q, back).sum(axis=0))

    n_c = problem.base_normals[corr.repulse_nn]
    offsets = translation - problem.robot_points  # the (Rq).(Rn) part is delta-invariant
    depths = _signed_depths(problem, corr, rotation, translation)
    r_count = depths.shape[0]
    if config.per_point_hinge:
        hinge = np.maximum(depths - config.hinge_margin, 0.0)
        scale = config.k_repulse / r_count
        grad_t += scale * (hinge[:, None] * (n_c @ rotation.T)).sum(axis=0)
        grad_w += scale * (jr.T @ (hinge[:, None] * np.cross(n_c, offsets @ rotation)).sum(axis=0))
    else:
        depth = float(np.mean(depths)) - config.hinge_margin
        if depth > 0.0:
            scale = config.k_repulse * depth / r_count
            grad_t += scale * (n_c @ rotation.T).sum(axis=0)
            grad_w += scale * (jr.T @ np.cross(n_c, offsets @ rotation).sum(axis=0))

    grad_w += 2.0 * config.l2_weight * delta.rotation_vector
    grad_t += 2.0 * config.l2_weight * translation
    return np.concatenate([grad_w, grad_t])


# --- public energy terms -------------------------------------------------


def attractive_energy(delta: DeltaPose, base_pose: Pose, object_cloud: PointCloud,
                      tactile_cloud: PointCloud, k_attract: float = 1.0,
                      per_taxel_springs: bool = False) -> float:
    """Spring energy pulling the posed object onto the activated taxels.

    Zero when no taxel is activated. Object points are mapped by base_pose,
    then by delta. Default is half the squared distance of the single
    globally closest pair; the per-taxel variant sums one spring per taxel.
    """
    if len(tactile_cloud) == 0:
        return 0.0
    posed = delta.as_pose().apply(base_pose.apply(object_cloud.points))
    if per_taxel_springs:
        _, sq = kernels.nearest_neighbors(tactile_cloud.points, posed)
        return 0.5 * k_attract * float(np.sum(sq))
    _, _, sq = kernels.min_pair(posed, tactile_cloud.points)
    return 0.5 * k_attract * float(sq)


def penetration_depth(delta: DeltaPose, base_pose: Pose, object_cloud: PointCloud,
                      robot_cloud: PointCloud) -> float:
    """Mean signed depth of the robot cloud w.r.t. the posed object surface.

    Positive when robot points sit inside the surface on average; each robot
    point pairs with its nearest posed object point and projects onto that
    point's outward normal.
    """
    problem = RefinementProblem.from_clouds(base_pose, object_cloud,
                                            PointCloud.empty(), robot_cloud)
    config = RefinementConfig()
    corr = correspondences(problem, delta, config)
    rotation = exp_map(delta.rotation_vector)
    return float(np.mean(_signed_depths(problem, corr, rotation, delta.translation)))


def repulsive_energy(delta: DeltaPose, base_pose: Pose, object_cloud: PointCloud,
                     robot_cloud: PointCloud, k_repulse: float = 1000.0,
                     per_point_hinge: bool = False, hinge_margin: float = 0.0) -> float:
    """One-sided penalty on interpenetration; exactly zero when clear."""
    config = RefinementConfig(k_repulse=k_repulse, per_point_hinge=per_point_hinge,
                              hinge_margin=hinge_margin)
    problem = RefinementProblem.from_clouds(base_pose, object_cloud,
                                            PointCloud.empty(), robot_cloud)
    corr = correspondences(problem, delta, config)
    return energy_given(problem, delta, corr, config).repulsive


def regularization(delta: DeltaPose, l2_weight: float = 1000.0) -> float:
    """L2 penalty on the raw 6-vector (squared radians plus squared meters)."""
    w = delta.rotation_vector
    t = delta.translation
    return l2_weight * (float(w @ w) + float(t @ t))


def total_energy(scene: Scene, visual_pose: Pose, delta: DeltaPose,
                 config: RefinementConfig = RefinementConfig()) -> EnergyBreakdown:
    """Energy at a delta with correspondences established at that delta."""
    problem = RefinementProblem.from_scene(scene, visual_pose)
    return energy_given(problem, delta, correspondences(problem, delta, config), config)


def energy_gradient(scene: Scene, visual_pose: Pose, delta: DeltaPose,
                    config: RefinementConfig = RefinementConfig()) -> np.ndarray:
    """Analytic gradient at a delta (correspondences established there)."""
    problem = RefinementProblem.from_scene(scene, visual_pose)
    return gradient_given(problem, delta, correspondences(problem, delta, config), config)


# --- initialization and the optimization loop ----------------------------


def init_delta(prev_taxel_poses, now_taxel_poses) -> DeltaPose:
    """Seed the correction with the mean translation of shared active taxels.

    Both lists refer to the same taxels in the same order; empty lists (no
    shared activated taxels, or no previous frame) give the zero delta.
    """
    if len(prev_taxel_poses) != len(now_taxel_poses):
        raise InvalidArgumentError("taxel pose lists must pair up")
    if not prev_taxel_poses:
        return DeltaPose.zero()
    moves = [now.translation - prev.translation
             for prev, now in zip(prev_taxel_poses, now_taxel_poses)]
    return DeltaPose(np.zeros(3), np.mean(moves, axis=0))


def init_from_scene(scene: Scene) -> DeltaPose:
    """Taxel-motion initialization from the scene's previous-frame record."""
    prev = scene.previous
    if prev is None or prev.taxel_poses is None or prev.taxel_active is None:
        return DeltaPose.zero()
    shared = np.flatnonzero(prev.taxel_active & scene.reading.activated)
    return init_delta([prev.taxel_poses[i] for i in shared],
                      [scene.taxel_poses[i] for i in shared])


def refine(scene: Scene, visual_pose: Pose,
           config: RefinementConfig = RefinementConfig(),
           initial_delta: Optional[DeltaPose] = None) -> RefinementResult:
    """Adam descent on the total energy; returns delta composed with the pose.

    Correspondences refresh every iteration; each trace entry records the
    evaluation point before its update step. Raises NumericFailure (carrying
    the trace so far) if the energy or gradient goes non-finite.
    """
    problem = RefinementProblem.from_scene(scene, visual_pose)
    if initial_delta is None:
        initial_delta = init_from_scene(scene)
    x = initial_delta.as_vector()
    m = np.zeros(6)
    v = np.zeros(6)
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    entries = []
    for step in range(1, config.iterations + 1):
        delta = DeltaPose.from_vector(x)
        corr = correspondences(problem, delta, config)
        energy = energy_given(problem, delta, corr, config)
        grad = gradient_given(problem, delta, corr, config)
        if not (math.isfinite(energy.total) and np.all(np.isfinite(grad))):
            raise NumericFailure(f"non-finite energy at iteration {step}",
                                 trace=RefinementTrace(tuple(entries)))
        entries.append(TraceEntry(delta, energy, float(np.linalg.norm(grad))))
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1 ** step)
        v_hat = v / (1.0 - b2 ** step)
        x = x - config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

    final_delta = DeltaPose.from_vector(x)
    final_corr = correspondences(problem, final_delta, config)
    final_energy = energy_given(problem, final_delta, final_corr, config)
    if not math.isfinite(final_energy.total):
        raise NumericFailure("non-finite final energy",
                             trace=RefinementTrace(tuple(entries)))
    return RefinementResult(refined_pose=final_delta.as_pose().compose(visual_pose),
                            delta=final_delta,
                            initial_energy=entries[0].energy,
                            final_energy=final_energy,
                            trace=RefinementTrace(tuple(entries)))
