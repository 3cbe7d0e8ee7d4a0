"""Deterministic scene and trajectory generation for grasped objects.

Every generated artifact is fully determined by an integer seed. Fingers are
prismatic pads mounted on a meshless palm; their advance is solved so that the
tactile face sits at a known gap from the object surface, which makes the
ground-truth pose feasible by construction.
"""

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import GenerationError, InvalidArgumentError, SceneFormatError
from ..feasibility import Thresholds, check_all
from ..geometry import Pose, exp_map
from ..scene import (
    FrameSpec,
    GripperSpec,
    Joint,
    KinematicChain,
    Link,
    ObjectSpec,
    PreviousFrame,
    SceneDocument,
    TaxelMount,
    build_scene,
    contact_patch,
    frame_spec_from_dict,
    frame_spec_to_dict,
    gripper_spec_from_dict,
    gripper_spec_to_dict,
    object_spec_from_dict,
    object_spec_to_dict,
)
from .shapes import make_shape, random_shape, support_distance

DEFAULT_PAD_EXTENTS = (0.016, 0.016, 0.008)

# Reject grasp orientations whose contact ray grazes the surface; a flat pad
# placed on a grazing exit point can clip into the object.
MIN_EXIT_ALIGNMENT = 0.75

SCENARIOS = ("grasp", "pick", "handover")

_FINGER_TEMPLATES = {
    2: ((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)),
    3: ((1.0, 0.0, 0.0),
        (-0.5, math.sqrt(3.0) / 2.0, 0.0),
        (-0.5, -math.sqrt(3.0) / 2.0, 0.0)),
    4: ((1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)),
}


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n <= 1e-12:
        return np.array([1.0, 0.0, 0.0])
    return v / n


def finger_directions(fingers: int) -> np.ndarray:
    """Palm-frame unit directions from the palm center toward each fingertip."""
    if fingers not in _FINGER_TEMPLATES:
        raise InvalidArgumentError(f"no finger template for {fingers} fingers")
    dirs = np.asarray(_FINGER_TEMPLATES[fingers], dtype=np.float64)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _rotation_to(target: np.ndarray) -> np.ndarray:
    """Rotation matrix taking +z to the given unit vector."""
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(z, target)
    s = np.linalg.norm(axis)
    c = float(z @ target)
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        return exp_map(np.array([np.pi, 0.0, 0.0]))
    return exp_map(axis / s * math.atan2(s, c))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = _unit(rng.normal(size=3))
    angle = rng.uniform(0.0, np.pi)
    return exp_map(axis * angle)


@dataclass(frozen=True)
class GraspSpec:
    """Geometry of a simple claw: prismatic finger pads around a meshless palm."""

    fingers: int = 3
    reach: float = 0.18  # palm center to fully retracted pad center
    standoff: float = 0.008  # gap between the pad face and the surface at contact
    pad_extents: tuple = DEFAULT_PAD_EXTENTS
    detached: tuple = ()  # finger indices held short of contact
    detach_gap: float = 0.04

    def __post_init__(self):
        if self.reach <= 0 or self.standoff < 0 or self.detach_gap <= 0:
            raise InvalidArgumentError("grasp lengths must be positive")
        if any(i < 0 or i >= self.fingers for i in self.detached):
            raise InvalidArgumentError("detached finger index out of range")


@dataclass(frozen=True)
class NoiseModel:
    """Perturbation applied to ground-truth poses to mimic a visual estimator."""

    translation_sigma: float = 0.0
    rotation_sigma: float = 0.0
    dropout_probability: float = 0.0
    outlier_translation: float = 0.3

    def __post_init__(self):
        if min(self.translation_sigma, self.rotation_sigma,
               self.outlier_translation) < 0:
            raise InvalidArgumentError("noise magnitudes must be non-negative")
        if not 0.0 <= self.dropout_probability <= 1.0:
            raise InvalidArgumentError("dropout_probability must be in [0, 1]")

    def to_dict(self) -> dict:
        return {"translation_sigma": self.translation_sigma,
                "rotation_sigma": self.rotation_sigma,
                "dropout_probability": self.dropout_probability,
                "outlier_translation": self.outlier_translation}

    @staticmethod
    def from_dict(data: dict) -> "NoiseModel":
        return NoiseModel(**data)


def perturb_pose(pose: Pose, noise: NoiseModel, rng: np.random.Generator) -> Pose:
    """Jitter a pose; with probability dropout_probability add a gross jump."""
    u = rng.random()
    rot_axis = _unit(rng.normal(size=3))
    angle = rng.normal(0.0, noise.rotation_sigma) if noise.rotation_sigma > 0 else 0.0
    jitter = rng.normal(0.0, noise.translation_sigma, 3)
    jump_axis = _unit(rng.normal(size=3))

    rotation = exp_map(rot_axis * angle) @ pose.rotation if angle != 0.0 else pose.rotation
    translation = pose.translation + jitter
    if u < noise.dropout_probability:
        translation = translation + noise.outlier_translation * jump_axis
    return Pose(rotation, translation)


def claw_chain(directions: np.ndarray, reach: float, pad_extents=DEFAULT_PAD_EXTENTS,
               root_name: str = "palm") -> KinematicChain:
    """Chain with one prismatic pad per direction; joint value advances the pad
    toward the palm center along its direction."""
    pad = make_shape({"kind": "box", "extents": list(pad_extents)})
    links = [Link(root_name, -1, Pose.identity(), Joint("fixed"))]
    taxels = []
    for i, d in enumerate(np.asarray(directions, dtype=np.float64)):
        rot = _rotation_to(-_unit(d))  # local +z points back at the palm center
        links.append(Link(f"finger{i}", 0, Pose(rot, reach * d),
                          Joint("prismatic", np.array([0.0, 0.0, 1.0])), pad))
        taxels.append(TaxelMount(i + 1, Pose(np.eye(3), np.array([0.0, 0.0, pad_extents[2] / 2.0]))))
    return KinematicChain(tuple(links), tuple(taxels))


def _exit_alignment(shape: dict, direction: np.ndarray) -> float:
    """Cosine between the contact ray and the surface normal where it exits."""
    u = _unit(np.asarray(direction, dtype=np.float64))
    kind = shape["kind"]
    if kind == "sphere":
        return 1.0
    if kind == "box":
        half = np.asarray(shape["extents"], dtype=np.float64) / 2.0
        with np.errstate(divide="ignore"):
            ratios = np.where(np.abs(u) > 1e-12, half / np.abs(u), np.inf)
        return float(np.abs(u[int(np.argmin(ratios))]))
    if kind == "cylinder":
        radial = float(np.linalg.norm(u[:2]))
        side = shape["radius"] / radial if radial > 1e-12 else np.inf
        cap = shape["height"] / 2.0 / abs(u[2]) if abs(u[2]) > 1e-12 else np.inf
        return radial if side <= cap else abs(u[2])
    raise InvalidArgumentError(f"unknown shape kind {kind!r}")


@dataclass(frozen=True)
class _GraspGeometry:
    """Solved grasp: everything a scenario script needs to pose frames."""

    shape: dict
    grasp: GraspSpec
    chain: KinematicChain
    directions: np.ndarray  # palm frame
    touch_joints: np.ndarray  # advance at which each pad face reaches standoff
    surface_distances: np.ndarray  # body frame, along each contact ray
    object_rotation: np.ndarray
    object_translation: np.ndarray
    grip_rotation: np.ndarray
    object_seed: int
    gripper_seed: int

    def ground_truth(self) -> Pose:
        return Pose(self.object_rotation, self.object_translation)

    def base_pose(self, offset=np.zeros(3)) -> Pose:
        return Pose(self.grip_rotation, self.object_translation + offset)

    def joints_at(self, gaps: np.ndarray) -> np.ndarray:
        """Joint values placing each pad face at the given gap from the surface."""
        pad_half = self.grasp.pad_extents[2] / 2.0
        q = self.grasp.reach - pad_half - self.surface_distances - gaps
        return np.clip(q, 0.0, None)

    def active_mask(self, joints: np.ndarray) -> np.ndarray:
        """A taxel fires when its pad face is within standoff of the surface."""
        pad_half = self.grasp.pad_extents[2] / 2.0
        gaps = self.grasp.reach - joints - pad_half - self.surface_distances
        return gaps <= self.grasp.standoff + 1e-9


def _solve_grasp(seed: int, shape: Optional[dict], grasp: GraspSpec,
                 max_attempts: int = 500) -> _GraspGeometry:
    root = np.random.SeedSequence(seed)
    shape_ss, pose_ss, sample_ss = root.spawn(3)
    shape_rng = np.random.default_rng(shape_ss)
    pose_rng = np.random.default_rng(pose_ss)
    object_seed, gripper_seed = (int(x) for x in sample_ss.generate_state(2))

    if shape is None:
        shape = random_shape(shape_rng)
    dirs = finger_directions(grasp.fingers)
    chain = claw_chain(dirs, grasp.reach, grasp.pad_extents)
    pad_half = grasp.pad_extents[2] / 2.0

    object_rotation = random_rotation(pose_rng)
    object_translation = pose_rng.uniform([-0.15, -0.15, 0.35], [0.15, 0.15, 0.60])

    for _ in range(max_attempts):
        grip_rotation = random_rotation(pose_rng)
        body_dirs = (object_rotation.T @ grip_rotation @ dirs.T).T
        distances = np.array([support_distance(shape, d) for d in body_dirs])
        aligned = all(_exit_alignment(shape, d) >= MIN_EXIT_ALIGNMENT for d in body_dirs)
        touch = grasp.reach - pad_half - distances - grasp.standoff
        if aligned and np.all(touch > 0.01) and np.all(touch < grasp.reach - pad_half):
            return _GraspGeometry(shape, grasp, chain, dirs, touch, distances,
                                  object_rotation, object_translation,
                                  grip_rotation, object_seed, gripper_seed)
    raise GenerationError(f"no well-aligned grasp orientation found for seed {seed}")


def _frame_spec(joints: np.ndarray, base_pose: Pose,
                active: np.ndarray, gt: Pose, visual: Pose,
                previous: Optional[PreviousFrame] = None) -> FrameSpec:
    values = np.where(active, 1.0, 0.0)
    return FrameSpec(joints=np.asarray(joints, dtype=np.float64), base_pose=base_pose,
                     taxel_values=values, threshold=0.5, visual_pose=visual,
                     ground_truth_pose=gt, previous=previous)


def generate_scene(seed: int, shape: Optional[dict] = None,
                   grasp: GraspSpec = GraspSpec(),
                   sample_count: int = 2048, voxel_size: float = 0.005,
                   samples_per_link: int = 128,
                   visual_noise: Optional[NoiseModel] = None,
                   thresholds: Thresholds = Thresholds()) -> SceneDocument:
    """Build a single grasped-object scene whose ground truth passes all checks.

    The visual estimate equals the ground truth unless visual_noise is given.
    """
    root = np.random.SeedSequence((seed, 1))
    noise_rng = np.random.default_rng(root)
    for attempt in range(20):
        geometry = _solve_grasp(seed + 1_000_003 * attempt, shape, grasp)
        gaps = np.full(grasp.fingers, grasp.standoff)
        for i in grasp.detached:
            gaps[i] += grasp.detach_gap
        joints = geometry.joints_at(gaps)
        active = geometry.active_mask(joints)
        gt = geometry.ground_truth()
        visual = perturb_pose(gt, visual_noise, noise_rng) if visual_noise else gt
        doc = SceneDocument(
            object=ObjectSpec(make_shape(geometry.shape), sample_count, voxel_size,
                              geometry.object_seed),
            gripper=GripperSpec(geometry.chain, samples_per_link, geometry.gripper_seed),
            frame=_frame_spec(joints, geometry.base_pose(), active, gt, visual),
            scene_id=f"synth-{seed:06d}")
        if check_all(build_scene(doc), gt, thresholds).overall_pass:
            return doc
    raise GenerationError(f"could not build a feasible scene for seed {seed}")


@dataclass(frozen=True)
class TrajectoryDocument:
    """A scripted sequence of frames over one object and one gripper."""

    scenario: str
    object: ObjectSpec
    gripper: GripperSpec
    frames: tuple
    trajectory_id: str = ""

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {self.scenario!r}")
        if not self.frames:
            raise InvalidArgumentError("trajectory needs at least one frame")

    def __len__(self) -> int:
        return len(self.frames)

    def scene_documents(self) -> list:
        return [SceneDocument(self.object, self.gripper, frame,
                              f"{self.trajectory_id}:{k:03d}")
                for k, frame in enumerate(self.frames)]


def build_trajectory_scenes(doc: TrajectoryDocument) -> list:
    """Build every frame, sampling the object cloud once and reusing it."""
    scenes = []
    shared_cloud = None
    shared_voxels = None
    for scene_doc in doc.scene_documents():
        scene = build_scene(scene_doc, shared_cloud, shared_voxels)
        shared_cloud = scene.object_cloud
        shared_voxels = scene.object_voxels
        scenes.append(scene)
    return scenes


def _with_history(geometry: _GraspGeometry, specs: list, shape_mesh,
                  sample_count: int, voxel_size: float, samples_per_link: int,
                  contact_threshold: float) -> list:
    """Attach each frame's predecessor state: ground-truth pose, contact patch,
    taxel poses and activation. Trackers overwrite the pose with their own
    previous output; generation records the ideal values."""
    object_spec = ObjectSpec(shape_mesh, sample_count, voxel_size, geometry.object_seed)
    gripper_spec = GripperSpec(geometry.chain, samples_per_link, geometry.gripper_seed)
    probe = build_scene(SceneDocument(object_spec, gripper_spec, specs[0]))
    cloud = probe.object_cloud

    out = [specs[0]]
    prev_scene = probe
    for spec in specs[1:]:
        prev_gt = prev_scene.ground_truth_pose
        patch = contact_patch(cloud, prev_gt, prev_scene.tactile_cloud, contact_threshold)
        previous = PreviousFrame(prev_gt, patch, prev_scene.taxel_poses,
                                 prev_scene.reading.activated.copy())
        spec = replace(spec, previous=previous)
        out.append(spec)
        prev_scene = build_scene(
            SceneDocument(object_spec, gripper_spec, spec),
            probe.object_cloud, probe.object_voxels)
    return out


def _simulate_frames(geometry: _GraspGeometry, scenario: str, frames: int):
    """Yield (base_offset, joints, object_offset) per frame, camera frame."""
    grasp = geometry.grasp
    touch = geometry.touch_joints
    if scenario == "grasp":
        n_approach = max(2, frames // 2)
        n_close = frames - n_approach
        approach = geometry.grip_rotation @ np.array([0.0, 0.0, 1.0])
        for k in range(n_approach):
            offset = 0.08 * (1.0 - k / (n_approach - 1))
            yield approach * offset, np.zeros(grasp.fingers), np.zeros(3)
        for k in range(1, n_close + 1):
            advance = min(1.0, k / max(1, n_close - 2))
            yield np.zeros(3), touch * advance, np.zeros(3)
    elif scenario == "pick":
        lift = 0.20
        for k in range(frames):
            dz = np.array([0.0, 0.0, lift * k / (frames - 1)])
            yield dz, touch, dz
    else:
        raise InvalidArgumentError(f"no script for scenario {scenario!r}")


def _handover_chain(grasp: GraspSpec):
    """Two 2-finger claws sharing one root, offset 90 degrees around z."""
    dirs_a = finger_directions(2)
    rot90 = exp_map(np.array([0.0, 0.0, np.pi / 2.0]))
    dirs_b = (rot90 @ dirs_a.T).T
    pad = make_shape({"kind": "box", "extents": list(grasp.pad_extents)})
    links = [Link("mount", -1, Pose.identity(), Joint("fixed"))]
    taxels = []
    for label, dirs in (("a", dirs_a), ("b", dirs_b)):
        for i, d in enumerate(dirs):
            rot = _rotation_to(-_unit(d))
            links.append(Link(f"claw_{label}_finger{i}", 0, Pose(rot, grasp.reach * d),
                              Joint("prismatic", np.array([0.0, 0.0, 1.0])), pad))
            taxels.append(TaxelMount(len(links) - 1,
                                     Pose(np.eye(3), np.array([0.0, 0.0, grasp.pad_extents[2] / 2.0]))))
    all_dirs = np.vstack([dirs_a, dirs_b])
    return KinematicChain(tuple(links), tuple(taxels)), all_dirs


def _solve_handover(seed: int, shape: Optional[dict], grasp: GraspSpec,
                    max_attempts: int = 500) -> _GraspGeometry:
    root = np.random.SeedSequence(seed)
    shape_ss, pose_ss, sample_ss = root.spawn(3)
    shape_rng = np.random.default_rng(shape_ss)
    pose_rng = np.random.default_rng(pose_ss)
    object_seed, gripper_seed = (int(x) for x in sample_ss.generate_state(2))

    if shape is None:
        shape = random_shape(shape_rng)
    chain, dirs = _handover_chain(grasp)
    pad_half = grasp.pad_extents[2] / 2.0

    object_rotation = random_rotation(pose_rng)
    object_translation = pose_rng.uniform([-0.15, -0.15, 0.35], [0.15, 0.15, 0.60])
    for _ in range(max_attempts):
        grip_rotation = random_rotation(pose_rng)
        body_dirs = (object_rotation.T @ grip_rotation @ dirs.T).T
        distances = np.array([support_distance(shape, d) for d in body_dirs])
        aligned = all(_exit_alignment(shape, d) >= MIN_EXIT_ALIGNMENT for d in body_dirs)
        touch = grasp.reach - pad_half - distances - grasp.standoff
        if aligned and np.all(touch > 0.01) and np.all(touch < grasp.reach - pad_half):
            return _GraspGeometry(shape, grasp, chain, dirs, touch, distances,
                                  object_rotation, object_translation,
                                  grip_rotation, object_seed, gripper_seed)
    raise GenerationError(f"no well-aligned handover orientation found for seed {seed}")


def simulate_trajectory(scenario: str, seed: int, frames: Optional[int] = None,
                        shape: Optional[dict] = None, grasp: GraspSpec = GraspSpec(),
                        sample_count: int = 2048, voxel_size: float = 0.005,
                        samples_per_link: int = 128,
                        visual_noise: Optional[NoiseModel] = None,
                        contact_threshold: float = 0.05) -> TrajectoryDocument:
    """Script a multi-frame manipulation with per-frame ground truth.

    grasp: fingers close on a static object, taxels activate at contact.
    pick: a grasped object is lifted 0.2 m.
    handover: one claw releases as a second claw takes over at mid-sequence.
    """
    if scenario not in SCENARIOS:
        raise InvalidArgumentError(f"unknown scenario {scenario!r}; use {SCENARIOS}")
    if frames is None:
        frames = {"grasp": 30, "pick": 25, "handover": 30}[scenario]
    if frames < 2:
        raise InvalidArgumentError("need at least two frames")
    if scenario == "pick" and 0.20 / (frames - 1) > 0.05:
        raise InvalidArgumentError("too few frames for a smooth 0.2 m lift")

    noise_rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))

    if scenario == "handover":
        geometry = _solve_handover(seed, shape, grasp)
        specs = _handover_specs(geometry, frames, visual_noise, noise_rng)
    else:
        geometry = _solve_grasp(seed, shape, grasp)
        specs = []
        for base_offset, joints, object_offset in _simulate_frames(geometry, scenario, frames):
            gt = Pose(geometry.object_rotation, geometry.object_translation + object_offset)
            active = geometry.active_mask(joints)
            visual = perturb_pose(gt, visual_noise, noise_rng) if visual_noise else gt
            specs.append(_frame_spec(joints, geometry.base_pose(base_offset),
                                     active, gt, visual))

    mesh = make_shape(geometry.shape)
    specs = _with_history(geometry, specs, mesh, sample_count, voxel_size,
                          samples_per_link, contact_threshold)
    return TrajectoryDocument(scenario,
                              ObjectSpec(mesh, sample_count, voxel_size, geometry.object_seed),
                              GripperSpec(geometry.chain, samples_per_link, geometry.gripper_seed),
                              tuple(specs), f"{scenario}-{seed:06d}")


def _handover_specs(geometry: _GraspGeometry, frames: int,
                    visual_noise: Optional[NoiseModel],
                    noise_rng: np.random.Generator) -> list:
    """Claw A holds until the transfer frame; claw B reaches contact exactly
    there; A backs off afterwards. The object never moves."""
    grasp = geometry.grasp
    touch = geometry.touch_joints  # four pads: A = 0..1, B = 2..3
    transfer = frames // 2
    retract_step = 0.015
    gt = geometry.ground_truth()

    specs = []
    for k in range(frames):
        joints = np.zeros(4)
        if k < transfer:
            joints[:2] = touch[:2]
            joints[2:] = np.clip(touch[2:] - retract_step * (transfer - k), 0.0, None)
        else:
            joints[:2] = np.clip(touch[:2] - retract_step * (k - transfer + 1), 0.0, None)
            joints[2:] = touch[2:]
        active = geometry.active_mask(joints)
        visual = perturb_pose(gt, visual_noise, noise_rng) if visual_noise else gt
        specs.append(_frame_spec(joints, geometry.base_pose(), active, gt, visual))
    return specs


def trajectory_to_dict(doc: TrajectoryDocument) -> dict:
    return {"scenario": doc.scenario,
            "trajectory_id": doc.trajectory_id,
            "object": object_spec_to_dict(doc.object),
            "gripper": gripper_spec_to_dict(doc.gripper),
            "frames": [frame_spec_to_dict(f) for f in doc.frames]}


def trajectory_from_dict(data: dict, base_dir: Optional[Path] = None) -> TrajectoryDocument:
    for key in ("scenario", "object", "gripper", "frames"):
        if key not in data:
            raise SceneFormatError(f"trajectory is missing {key!r}")
    return TrajectoryDocument(
        data["scenario"],
        object_spec_from_dict(data["object"], base_dir),
        gripper_spec_from_dict(data["gripper"], base_dir),
        tuple(frame_spec_from_dict(f) for f in data["frames"]),
        data.get("trajectory_id", ""))


def save_trajectory(doc: TrajectoryDocument, path) -> None:
    Path(path).write_text(json.dumps(trajectory_to_dict(doc), indent=1))


def load_trajectory(path) -> TrajectoryDocument:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path} is not valid JSON: {exc}") from exc
    return trajectory_from_dict(data, path.parent)
