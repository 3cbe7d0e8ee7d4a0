"""Synthetic scene generation, scripted trajectories, and the brute-force
oracles that gate the fast implementations."""

import numpy as np
import pytest

from vitapose.errors import InvalidArgumentError, SceneFormatError
from vitapose.feasibility import Thresholds, check_all
from vitapose.geometry import DeltaPose, Pose
from vitapose.refiner import RefinementConfig, refine, total_energy
from vitapose.scene import build_scene
from vitapose.synthbench import (
    SCENARIOS,
    SHAPE_KINDS,
    GraspSpec,
    NoiseModel,
    build_trajectory_scenes,
    generate_scene,
    load_trajectory,
    make_shape,
    oracle_feasibility,
    oracle_refine,
    perturb_pose,
    random_shape,
    refinement_candidates,
    save_trajectory,
    simulate_trajectory,
    support_distance,
    trajectory_from_dict,
    trajectory_to_dict,
)

from conftest import small_scene

SMALL = {"sample_count": 256, "samples_per_link": 48}


def rotation_angle(r_a: np.ndarray, r_b: np.ndarray) -> float:
    cos = (np.trace(r_a @ r_b.T) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


class TestShapes:
    def test_box_surface_area_exact(self):
        mesh = make_shape({"kind": "box", "extents": [0.04, 0.06, 0.1]})
        expected = 2.0 * (0.04 * 0.06 + 0.06 * 0.1 + 0.1 * 0.04)
        assert mesh.surface_area() == pytest.approx(expected, rel=1e-12)

    def test_sphere_area_close_to_analytic(self):
        mesh = make_shape({"kind": "sphere", "radius": 0.04})
        analytic = 4.0 * np.pi * 0.04 ** 2
        # inscribed facets always under-measure, but not by much
        assert 0.97 * analytic < mesh.surface_area() < analytic

    def test_cylinder_area_close_to_analytic(self):
        mesh = make_shape({"kind": "cylinder", "radius": 0.03, "height": 0.08})
        analytic = 2.0 * np.pi * 0.03 * (0.03 + 0.08)
        assert 0.97 * analytic < mesh.surface_area() < analytic

    def test_normals_point_outward(self):
        for spec in ({"kind": "sphere", "radius": 0.04},
                     {"kind": "box", "extents": [0.05, 0.06, 0.07]},
                     {"kind": "cylinder", "radius": 0.03, "height": 0.08}):
            mesh = make_shape(spec)
            centroids = mesh.vertices[mesh.triangles].mean(axis=1)
            outward = np.sum(mesh.face_normals() * centroids, axis=1)
            assert np.all(outward > 0), spec["kind"]

    def test_support_distance_hand_values(self):
        assert support_distance({"kind": "sphere", "radius": 0.04},
                                [0.3, -0.2, 0.9]) == 0.04
        box = {"kind": "box", "extents": [0.04, 0.06, 0.1]}
        assert support_distance(box, [1.0, 0.0, 0.0]) == pytest.approx(0.02)
        assert support_distance(box, [1.0, 1.0, 0.0]) == \
            pytest.approx(0.02 * np.sqrt(2.0), rel=1e-12)
        cyl = {"kind": "cylinder", "radius": 0.03, "height": 0.08}
        assert support_distance(cyl, [0.0, 0.0, -1.0]) == pytest.approx(0.04)
        assert support_distance(cyl, [0.0, 1.0, 0.0]) == pytest.approx(0.03)

    def test_support_point_lands_on_the_boundary(self, rng):
        for _ in range(50):
            spec = random_shape(rng)
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            p = support_distance(spec, u) * u
            if spec["kind"] == "sphere":
                extent = np.linalg.norm(p) / spec["radius"]
            elif spec["kind"] == "box":
                extent = np.max(np.abs(p) / (np.asarray(spec["extents"]) / 2.0))
            else:
                extent = max(np.linalg.norm(p[:2]) / spec["radius"],
                             abs(p[2]) / (spec["height"] / 2.0))
            assert extent == pytest.approx(1.0, rel=1e-9)

    def test_random_shape_stays_at_tabletop_scale(self, rng):
        for _ in range(50):
            spec = random_shape(rng)
            assert spec["kind"] in SHAPE_KINDS
            widest = 2.0 * max(support_distance(spec, u) for u in np.eye(3))
            assert 0.04 <= widest <= 0.16

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidArgumentError, match="unknown shape kind"):
            make_shape({"kind": "torus"})
        with pytest.raises(InvalidArgumentError, match="unknown shape kind"):
            support_distance({"kind": "torus"}, [1.0, 0.0, 0.0])

    def test_zero_direction_rejected(self):
        with pytest.raises(InvalidArgumentError, match="nonzero"):
            support_distance({"kind": "sphere", "radius": 0.04}, [0.0, 0.0, 0.0])


class TestNoiseModel:
    def test_zero_noise_is_bitwise_identity(self, rng):
        pose = Pose(np.eye(3), np.array([0.1, -0.2, 0.3]))
        out = perturb_pose(pose, NoiseModel(), rng)
        assert np.array_equal(out.rotation, pose.rotation)
        assert np.array_equal(out.translation, pose.translation)

    def test_jitter_statistics(self):
        rng = np.random.default_rng(99)
        noise = NoiseModel(translation_sigma=0.01, rotation_sigma=0.05)
        pose = Pose.identity()
        shifts, angles = [], []
        for _ in range(500):
            out = perturb_pose(pose, noise, rng)
            shifts.append(out.translation)
            angles.append(rotation_angle(out.rotation, pose.rotation))
        assert np.std(shifts, axis=0) == pytest.approx([0.01] * 3, rel=0.2)
        # folded normal: E|angle| = sigma * sqrt(2/pi)
        assert np.mean(angles) == pytest.approx(0.05 * np.sqrt(2 / np.pi), rel=0.2)

    def test_outlier_jump_magnitude(self):
        rng = np.random.default_rng(7)
        noise = NoiseModel(dropout_probability=1.0, outlier_translation=0.3)
        out = perturb_pose(Pose.identity(), noise, rng)
        assert np.linalg.norm(out.translation) == pytest.approx(0.3, rel=1e-12)

    def test_no_dropout_means_no_jump(self):
        rng = np.random.default_rng(7)
        out = perturb_pose(Pose.identity(), NoiseModel(dropout_probability=0.0), rng)
        assert np.array_equal(out.translation, np.zeros(3))

    def test_validation(self):
        with pytest.raises(InvalidArgumentError, match="non-negative"):
            NoiseModel(translation_sigma=-0.01)
        with pytest.raises(InvalidArgumentError, match="dropout_probability"):
            NoiseModel(dropout_probability=1.5)

    def test_dict_round_trip(self):
        noise = NoiseModel(0.01, 0.05, 0.1, 0.25)
        assert NoiseModel.from_dict(noise.to_dict()) == noise


class TestGenerateScene:
    @pytest.mark.parametrize("seed", [1, 2, 3, 4])
    def test_ground_truth_is_feasible(self, seed):
        scene = small_scene(seed)
        report = check_all(scene, scene.ground_truth_pose)
        assert report.overall_pass, report.to_dict()

    @pytest.mark.parametrize("fingers", [2, 3, 4])
    def test_finger_counts(self, fingers):
        scene = small_scene(50 + fingers, grasp=GraspSpec(fingers=fingers))
        assert len(scene.taxel_poses) == fingers
        assert check_all(scene, scene.ground_truth_pose).overall_pass

    def test_contact_is_actually_made(self):
        scene = small_scene(5)
        assert scene.reading.activated.sum() >= 1
        assert len(scene.tactile_cloud) == int(scene.reading.activated.sum())

    def test_identifier_format(self):
        doc = generate_scene(12, **SMALL)
        assert doc.scene_id == "synth-000012"

    def test_deterministic_regeneration(self):
        a = build_scene(generate_scene(77, **SMALL))
        b = build_scene(generate_scene(77, **SMALL))
        assert np.array_equal(a.object_cloud.points, b.object_cloud.points)
        assert np.array_equal(a.joints, b.joints)
        assert np.array_equal(a.visual_pose.rotation, b.visual_pose.rotation)
        assert np.array_equal(a.visual_pose.translation, b.visual_pose.translation)
        assert np.array_equal(a.reading.activated, b.reading.activated)

    def test_visual_noise_perturbs_only_the_visual_pose(self):
        clean = build_scene(generate_scene(8, **SMALL))
        noisy = build_scene(generate_scene(8, visual_noise=NoiseModel(0.01, 0.05),
                                           **SMALL))
        assert np.array_equal(clean.ground_truth_pose.translation,
                              noisy.ground_truth_pose.translation)
        assert not np.array_equal(clean.visual_pose.translation,
                                  noisy.visual_pose.translation)
        assert np.array_equal(clean.visual_pose.translation,
                              clean.ground_truth_pose.translation)


class TestTrajectories:
    def test_grasp_object_stays_put_and_gets_touched(self):
        doc = simulate_trajectory("grasp", seed=3, frames=8, **SMALL)
        scenes = build_trajectory_scenes(doc)
        assert len(scenes) == 8
        first = scenes[0].ground_truth_pose
        for scene in scenes[1:]:
            assert np.array_equal(scene.ground_truth_pose.translation,
                                  first.translation)
        assert scenes[0].reading.activated.sum() == 0
        assert scenes[-1].reading.activated.sum() >= 1

    def test_pick_lifts_by_a_constant_step(self):
        doc = simulate_trajectory("pick", seed=9, frames=5, **SMALL)
        scenes = build_trajectory_scenes(doc)
        start = scenes[0].ground_truth_pose.translation
        for k, scene in enumerate(scenes):
            lift = scene.ground_truth_pose.translation - start
            assert lift == pytest.approx([0.0, 0.0, 0.05 * k], abs=1e-12)
            assert check_all(scene, scene.ground_truth_pose).overall_pass

    def test_handover_switches_the_active_claw(self):
        doc = simulate_trajectory("handover", seed=4, frames=6, **SMALL)
        scenes = build_trajectory_scenes(doc)
        per_claw = len(scenes[0].taxel_poses) // 2
        early = np.flatnonzero(scenes[1].reading.activated)
        late = np.flatnonzero(scenes[-1].reading.activated)
        assert early.size > 0 and np.all(early < per_claw)
        assert late.size > 0 and np.all(late >= per_claw)

    def test_motion_is_continuous(self):
        for scenario in SCENARIOS:
            doc = simulate_trajectory(scenario, seed=6, **SMALL)
            scenes = build_trajectory_scenes(doc)
            for prev, now in zip(scenes, scenes[1:]):
                step = np.linalg.norm(now.ground_truth_pose.translation
                                      - prev.ground_truth_pose.translation)
                assert step <= 0.05 + 1e-9, scenario

    def test_previous_frame_wiring(self):
        doc = simulate_trajectory("pick", seed=9, frames=5, **SMALL)
        scenes = build_trajectory_scenes(doc)
        assert scenes[0].previous is None
        for prev, now in zip(scenes, scenes[1:]):
            assert np.array_equal(now.previous.pose.translation,
                                  prev.ground_truth_pose.translation)
            assert np.array_equal(now.previous.taxel_active,
                                  prev.reading.activated)
            for a, b in zip(now.previous.taxel_poses, prev.taxel_poses):
                assert np.array_equal(a.translation, b.translation)

    def test_identifier_format(self):
        doc = simulate_trajectory("grasp", seed=15, frames=4, **SMALL)
        assert doc.trajectory_id == "grasp-000015"
        assert [d.scene_id for d in doc.scene_documents()][:2] == \
            ["grasp-000015:000", "grasp-000015:001"]

    def test_bad_requests_rejected(self):
        with pytest.raises(InvalidArgumentError, match="unknown scenario"):
            simulate_trajectory("throw", seed=0)
        with pytest.raises(InvalidArgumentError, match="at least two"):
            simulate_trajectory("grasp", seed=0, frames=1)
        with pytest.raises(InvalidArgumentError, match="lift"):
            simulate_trajectory("pick", seed=0, frames=3)

    def test_json_round_trip(self, tmp_path):
        doc = simulate_trajectory("pick", seed=21, frames=5, **SMALL)
        path, = [tmp_path / "traj.json"]
        save_trajectory(doc, path)
        loaded = load_trajectory(path)
        assert loaded.scenario == doc.scenario
        assert loaded.trajectory_id == doc.trajectory_id
        original = build_trajectory_scenes(doc)
        rebuilt = build_trajectory_scenes(loaded)
        for a, b in zip(original, rebuilt):
            assert np.array_equal(a.ground_truth_pose.translation,
                                  b.ground_truth_pose.translation)
            assert np.array_equal(a.joints, b.joints)
            assert np.array_equal(a.reading.activated, b.reading.activated)

    def test_missing_field_rejected(self):
        doc = simulate_trajectory("grasp", seed=2, frames=3, **SMALL)
        data = trajectory_to_dict(doc)
        del data["frames"]
        with pytest.raises(SceneFormatError, match="frames"):
            trajectory_from_dict(data)


class TestOracleFeasibility:
    def test_agrees_with_fast_path_on_history_frames(self):
        doc = simulate_trajectory("pick", seed=11, frames=5,
                                  visual_noise=NoiseModel(0.01, 0.04), **SMALL)
        rng = np.random.default_rng(0)
        for scene in build_trajectory_scenes(doc):
            for pose in (scene.visual_pose,
                         Pose(scene.visual_pose.rotation,
                              scene.visual_pose.translation + rng.normal(0, 0.02, 3))):
                fast = check_all(scene, pose)
                slow = oracle_feasibility(scene, pose)
                assert fast.overall_pass == slow.overall_pass
                assert fast.contact.passed == slow.contact.passed
                assert fast.contact.min_distance == pytest.approx(
                    slow.contact.min_distance, abs=1e-12)
                assert fast.penetration.overlap_ratio == pytest.approx(
                    slow.penetration.overlap_ratio, abs=1e-12)
                assert fast.kinematic.evaluated == slow.kinematic.evaluated
                assert fast.kinematic.displacement == pytest.approx(
                    slow.kinematic.displacement, abs=1e-12)


class TestOracleRefine:
    def test_candidate_grid_layout(self):
        candidates = refinement_candidates()
        assert len(candidates) == 1 + 21 ** 3 + 3 * 21
        assert np.array_equal(candidates[0].as_vector(), np.zeros(6))
        translations = np.array([c.translation for c in candidates[1:1 + 21 ** 3]])
        assert translations.min() == -0.05 and translations.max() == 0.05
        rotations = np.array([c.rotation_vector for c in candidates[1 + 21 ** 3:]])
        assert np.all(np.count_nonzero(rotations, axis=1) <= 1)
        small = refinement_candidates(translation_range=0.01, translation_step=0.005,
                                      rotation_range=0.01, rotation_step=0.005)
        assert len(small) == 1 + 5 ** 3 + 3 * 5

    def test_prefers_the_zero_delta_at_ground_truth(self):
        scene = small_scene(33)
        pose, delta, energy = oracle_refine(scene, scene.ground_truth_pose)
        assert np.array_equal(delta.as_vector(), np.zeros(6))
        assert np.array_equal(pose.translation, scene.ground_truth_pose.translation)
        assert energy == total_energy(scene, scene.ground_truth_pose,
                                      DeltaPose.zero()).total

    @pytest.mark.parametrize("seed", [200, 201, 202, 203, 204, 205])
    def test_descent_reaches_the_exhaustive_optimum(self, seed):
        # the documented tracking configuration should land within 10% of a
        # dense grid search over corrections (it usually lands below it,
        # since the grid is 5 mm coarse)
        config = RefinementConfig(learning_rate=5e-3, iterations=600,
                                  k_attract=1.0, k_repulse=1000.0,
                                  l2_weight=0.05, per_taxel_springs=True)
        scene = small_scene(seed, noise=NoiseModel(0.02, 0.08))
        result = refine(scene, scene.visual_pose, config)
        _, _, grid_energy = oracle_refine(scene, scene.visual_pose, config)
        assert result.final_energy.total <= 1.1 * grid_energy
