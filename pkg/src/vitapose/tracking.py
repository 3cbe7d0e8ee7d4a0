"""Frame-by-frame pose tracking harness.

Runs a pose source through a sequence of scenes, optionally validating and
refining each estimate, and carries the accepted pose forward so the next
frame's kinematic check and motion-based initialization see what the tracker
actually produced rather than the dataset's ideal history.
"""

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError
from .feasibility import FeasibilityReport, Thresholds, check_all
from .geometry import Pose
from .icp import IcpConfig, icp_refine
from .metrics import MetricSample, add_error, adds_error, position_error
from .refiner import RefinementConfig, init_from_scene, refine
from .scene import PreviousFrame, Scene, contact_patch
from .synthbench.generate import NoiseModel, perturb_pose

METHODS = ("visual-only", "icp", "vita")

ABLATIONS = ("full", "no-attractive", "no-penetration", "no-l2", "no-init", "icp")


@dataclass(frozen=True)
class TrackerConfig:
    method: str = "vita"
    thresholds: Thresholds = Thresholds()
    refinement: RefinementConfig = RefinementConfig()
    icp: IcpConfig = IcpConfig()
    always_refine: bool = False  # skip the feasibility gate, refine every frame
    use_motion_init: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}; use {METHODS}")


def ablation_tracker(name: str, base: Optional[TrackerConfig] = None) -> TrackerConfig:
    """Tracker variant with one refinement ingredient removed."""
    base = base or TrackerConfig()
    if name not in ABLATIONS:
        raise InvalidArgumentError(f"unknown ablation {name!r}; use {ABLATIONS}")
    if name == "full":
        return base
    if name == "icp":
        return replace(base, method="icp")
    if name == "no-init":
        return replace(base, use_motion_init=False)
    field = {"no-attractive": "k_attract", "no-penetration": "k_repulse",
             "no-l2": "l2_weight"}[name]
    return replace(base, refinement=replace(base.refinement, **{field: 0.0}))


@dataclass(frozen=True)
class FrameRecord:
    """Everything observed while processing one frame."""

    scene_id: str
    frame_index: int
    method: str
    visual_pose: Pose
    output_pose: Pose
    report_before: FeasibilityReport
    report_after: FeasibilityReport
    refined: bool
    refine_seconds: float
    add: Optional[float] = None
    adds: Optional[float] = None
    pe: Optional[float] = None

    def metric_sample(self) -> MetricSample:
        return MetricSample(
            scene_id=self.scene_id, frame=self.frame_index, method=self.method,
            add=self.add if self.add is not None else float("nan"),
            adds=self.adds if self.adds is not None else float("nan"),
            pe=self.pe if self.pe is not None else float("nan"),
            feasible_before=self.report_before.overall_pass,
            feasible_after=self.report_after.overall_pass,
            refine_ms=self.refine_seconds * 1000.0)


def _with_tracker_history(scene: Scene, prev_output: Optional[Pose],
                          prev_scene: Optional[Scene],
                          thresholds: Thresholds) -> Scene:
    if prev_output is None or prev_scene is None:
        return scene
    patch = contact_patch(scene.object_cloud, prev_output, prev_scene.tactile_cloud,
                          thresholds.contact_max_distance)
    previous = PreviousFrame(prev_output, patch, prev_scene.taxel_poses,
                             prev_scene.reading.activated.copy())
    return replace(scene, previous=previous)


def _process(scene: Scene, visual: Pose, config: TrackerConfig):
    """Returns (output_pose, report_before, report_after, refined, seconds)."""
    before = check_all(scene, visual, config.thresholds)
    if config.method == "visual-only":
        return visual, before, before, False, 0.0

    if config.method == "icp":
        start = time.perf_counter()
        result = icp_refine(scene, visual, config.icp)
        elapsed = time.perf_counter() - start
        after = check_all(scene, result.refined_pose, config.thresholds)
        return result.refined_pose, before, after, True, elapsed

    if before.overall_pass and not config.always_refine:
        return visual, before, before, False, 0.0
    init = init_from_scene(scene) if config.use_motion_init else None
    start = time.perf_counter()
    result = refine(scene, visual, config.refinement, init)
    elapsed = time.perf_counter() - start
    after = check_all(scene, result.refined_pose, config.thresholds)
    return result.refined_pose, before, after, True, elapsed


def track_frame(scene: Scene, config: TrackerConfig,
                visual: Optional[Pose] = None, frame_index: int = 0) -> FrameRecord:
    """Process a single scene outside of any sequence context."""
    visual = visual if visual is not None else scene.visual_pose
    output, before, after, refined, seconds = _process(scene, visual, config)
    add = adds = pe = None
    if scene.ground_truth_pose is not None:
        add = add_error(output, scene.ground_truth_pose, scene.object_cloud.points)
        adds = adds_error(output, scene.ground_truth_pose, scene.object_cloud.points)
        pe = position_error(output, scene.ground_truth_pose)
    return FrameRecord(scene.scene_id, frame_index, config.method, visual, output,
                       before, after, refined, seconds, add, adds, pe)


def run_tracking(scenes, config: TrackerConfig,
                 relative_noise: Optional[NoiseModel] = None,
                 seed: int = 0) -> list:
    """Track through a scene sequence, feeding each frame's accepted pose into
    the next frame's history.

    With relative_noise set, the per-frame visual estimate is synthesized the
    way a frame-to-frame tracker would produce it: the previous accepted pose
    composed with a noisy copy of the true inter-frame motion. Outlier draws
    then persist in the pose stream instead of vanishing after one frame.
    Without it, each scene's stored visual estimate is used as-is.
    """
    if relative_noise is not None:
        for scene in scenes:
            if scene.ground_truth_pose is None:
                raise InvalidArgumentError(
                    "relative_noise needs ground truth on every frame")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 3)))

    records = []
    prev_output: Optional[Pose] = None
    prev_scene: Optional[Scene] = None
    prev_gt: Optional[Pose] = None
    for k, scene in enumerate(scenes):
        if relative_noise is not None and prev_output is not None:
            true_motion = scene.ground_truth_pose.compose(prev_gt.inverse())
            visual = perturb_pose(true_motion, relative_noise, rng).compose(prev_output)
        else:
            visual = scene.visual_pose
        scene_k = _with_tracker_history(scene, prev_output, prev_scene, config.thresholds)
        records.append(track_frame(scene_k, config, visual, k))
        prev_output = records[-1].output_pose
        prev_scene = scene_k
        prev_gt = scene.ground_truth_pose
    return records
