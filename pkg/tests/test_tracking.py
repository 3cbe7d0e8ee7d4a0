"""Tracker gating, ablation wiring, and recovery from outlier estimates."""

import dataclasses
import math

import numpy as np
import pytest

from vitapose.errors import InvalidArgumentError
from vitapose.geometry import Pose
from vitapose.refiner import RefinementConfig
from vitapose.synthbench import NoiseModel, build_trajectory_scenes, simulate_trajectory
from vitapose.tracking import (
    ABLATIONS,
    METHODS,
    TrackerConfig,
    _with_tracker_history,
    ablation_tracker,
    run_tracking,
    track_frame,
)

from conftest import small_scene

SMALL = {"sample_count": 256, "samples_per_link": 48}

TUNED = RefinementConfig(learning_rate=5e-3, iterations=600, k_attract=1.0,
                         k_repulse=1000.0, l2_weight=0.05, per_taxel_springs=True)


class TestConfigs:
    def test_unknown_method_rejected(self):
        with pytest.raises(InvalidArgumentError, match="unknown method"):
            TrackerConfig(method="magic")

    def test_method_names(self):
        assert METHODS == ("visual-only", "icp", "vita")
        for method in METHODS:
            TrackerConfig(method=method)

    def test_ablation_wiring(self):
        base = TrackerConfig(refinement=TUNED, always_refine=True)
        assert ablation_tracker("full", base) is base
        assert ablation_tracker("no-attractive", base).refinement.k_attract == 0.0
        assert ablation_tracker("no-penetration", base).refinement.k_repulse == 0.0
        assert ablation_tracker("no-l2", base).refinement.l2_weight == 0.0
        assert not ablation_tracker("no-init", base).use_motion_init
        assert ablation_tracker("icp", base).method == "icp"
        # untouched knobs survive the rewrite
        assert ablation_tracker("no-l2", base).refinement.learning_rate == \
            TUNED.learning_rate
        assert ablation_tracker("no-attractive", base).always_refine

    def test_unknown_ablation_rejected(self):
        with pytest.raises(InvalidArgumentError, match="unknown ablation"):
            ablation_tracker("no-gravity")

    def test_ablation_list_is_stable(self):
        assert ABLATIONS == ("full", "no-attractive", "no-penetration",
                             "no-l2", "no-init", "icp")


class TestTrackFrame:
    def test_feasible_estimate_passes_through_unrefined(self):
        scene = small_scene(61)
        record = track_frame(scene, TrackerConfig(method="vita"))
        assert record.report_before.overall_pass
        assert not record.refined
        assert record.output_pose is scene.visual_pose
        assert record.report_after is record.report_before
        assert record.refine_seconds == 0.0

    def test_always_refine_skips_the_gate(self):
        scene = small_scene(61)
        record = track_frame(scene, TrackerConfig(method="vita", always_refine=True,
                                                  refinement=TUNED))
        assert record.refined
        assert record.refine_seconds > 0.0

    def test_visual_only_never_touches_the_pose(self):
        scene = small_scene(62, noise=NoiseModel(0.05, 0.1))
        record = track_frame(scene, TrackerConfig(method="visual-only"))
        assert not record.refined
        assert record.output_pose is scene.visual_pose
        assert record.report_after is record.report_before

    def test_icp_refines_even_when_feasible(self):
        scene = small_scene(61)
        record = track_frame(scene, TrackerConfig(method="icp"))
        assert record.report_before.overall_pass
        assert record.refined

    def test_metrics_need_ground_truth(self):
        scene = small_scene(63)
        blind = dataclasses.replace(scene, ground_truth_pose=None)
        record = track_frame(blind, TrackerConfig(method="visual-only"))
        assert record.add is None and record.adds is None and record.pe is None
        sample = record.metric_sample()
        assert math.isnan(sample.add) and math.isnan(sample.pe)

    def test_metric_sample_mapping(self):
        scene = small_scene(63)
        record = track_frame(scene, TrackerConfig(method="visual-only"),
                             frame_index=4)
        sample = record.metric_sample()
        assert sample.scene_id == scene.scene_id
        assert sample.frame == 4
        assert sample.method == "visual-only"
        assert sample.feasible_before == record.report_before.overall_pass
        assert sample.refine_ms == record.refine_seconds * 1000.0
        assert sample.pe == record.pe


class TestHistory:
    def test_history_carries_the_tracker_output(self):
        doc = simulate_trajectory("pick", seed=9, frames=5, **SMALL)
        scenes = build_trajectory_scenes(doc)
        tracked = Pose(np.eye(3), np.array([9.0, 9.0, 9.0]))
        rigged = _with_tracker_history(scenes[1], tracked, scenes[0],
                                       TrackerConfig().thresholds)
        assert rigged.previous.pose is tracked
        # a pose far from every taxel leaves an empty contact patch
        assert rigged.previous.patch_indices.size == 0
        assert np.array_equal(rigged.previous.taxel_active,
                              scenes[0].reading.activated)

    def test_no_history_without_a_previous_frame(self):
        doc = simulate_trajectory("pick", seed=9, frames=5, **SMALL)
        scenes = build_trajectory_scenes(doc)
        assert _with_tracker_history(scenes[1], None, None,
                                     TrackerConfig().thresholds) is scenes[1]

    def test_first_record_has_no_kinematic_history(self):
        doc = simulate_trajectory("pick", seed=9, frames=5, **SMALL)
        scenes = build_trajectory_scenes(doc)
        records = run_tracking(scenes, TrackerConfig(method="visual-only"))
        assert not records[0].report_before.kinematic.evaluated
        assert len(records) == len(scenes)
        assert [r.frame_index for r in records] == list(range(len(scenes)))


class TestRunTracking:
    def test_uses_stored_visual_estimates_by_default(self):
        doc = simulate_trajectory("pick", seed=9, frames=5,
                                  visual_noise=NoiseModel(0.01, 0.02), **SMALL)
        scenes = build_trajectory_scenes(doc)
        records = run_tracking(scenes, TrackerConfig(method="visual-only"))
        for record, scene in zip(records, scenes):
            assert record.visual_pose is scene.visual_pose

    def test_relative_noise_requires_ground_truth(self):
        doc = simulate_trajectory("pick", seed=9, frames=5, **SMALL)
        scenes = build_trajectory_scenes(doc)
        scenes[2] = dataclasses.replace(scenes[2], ground_truth_pose=None)
        with pytest.raises(InvalidArgumentError, match="ground truth"):
            run_tracking(scenes, TrackerConfig(), relative_noise=NoiseModel(0.01))

    def test_deterministic_given_a_seed(self):
        doc = simulate_trajectory("pick", seed=14, frames=6, **SMALL)
        scenes = build_trajectory_scenes(doc)
        noise = NoiseModel(0.004, 0.02, dropout_probability=0.3)
        config = TrackerConfig(method="visual-only")
        a = run_tracking(scenes, config, relative_noise=noise, seed=5)
        b = run_tracking(scenes, config, relative_noise=noise, seed=5)
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.output_pose.translation,
                                  rb.output_pose.translation)
        c = run_tracking(scenes, config, relative_noise=noise, seed=6)
        assert not np.array_equal(a[1].output_pose.translation,
                                  c[1].output_pose.translation)

    def test_outliers_persist_without_refinement_and_wash_out_with_it(self):
        # with pose estimates propagated frame to frame, one gross jump stays
        # in the visual-only stream forever; the refiner pulls it back to the
        # tactile evidence within a frame or two
        doc = simulate_trajectory("pick", seed=14, frames=10, **SMALL)
        scenes = build_trajectory_scenes(doc)
        noise = NoiseModel(0.004, 0.02, dropout_probability=0.3,
                           outlier_translation=0.3)
        passive = run_tracking(scenes, TrackerConfig(method="visual-only"),
                               relative_noise=noise, seed=5)
        active = run_tracking(scenes, TrackerConfig(method="vita", refinement=TUNED),
                              relative_noise=noise, seed=5)
        assert passive[-1].pe > 0.3
        assert active[-1].pe < 0.05
        assert max(record.pe for record in active) < 0.1
        assert any(record.refined for record in active)
