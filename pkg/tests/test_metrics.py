"""Pose-error metrics: hand values, the AUC closed form, CSV formatting."""

import numpy as np
import pytest

from vitapose.errors import InvalidArgumentError
from vitapose.geometry import DeltaPose, Pose, exp_map
from vitapose.metrics import (
    CSV_COLUMNS,
    MetricSample,
    add_error,
    adds_error,
    auc,
    position_error,
)

from conftest import random_pose


def translated(t) -> Pose:
    return Pose(np.eye(3), np.asarray(t, dtype=np.float64))


class TestPointwiseErrors:
    def test_position_error_is_euclidean(self):
        assert position_error(translated([0.03, 0.04, 0.0]), Pose.identity()) == \
            pytest.approx(0.05, rel=1e-12)

    def test_identical_poses_give_zero(self, rng):
        pose = random_pose(rng)
        pts = rng.uniform(-0.05, 0.05, (30, 3))
        assert add_error(pose, pose, pts) == 0.0
        assert adds_error(pose, pose, pts) == pytest.approx(0.0, abs=1e-12)
        assert position_error(pose, pose) == 0.0

    def test_add_under_pure_translation_is_the_shift(self, rng):
        pts = rng.uniform(-0.05, 0.05, (25, 3))
        est = translated([0.006, -0.008, 0.0])
        assert add_error(est, Pose.identity(), pts) == pytest.approx(0.01, rel=1e-12)

    def test_add_is_invariant_to_a_common_offset(self, rng):
        pts = rng.uniform(-0.05, 0.05, (25, 3))
        est, gt = random_pose(rng), random_pose(rng)
        base = add_error(est, gt, pts)
        off = np.array([0.3, -0.1, 0.2])
        shifted = add_error(Pose(est.rotation, est.translation + off),
                            Pose(gt.rotation, gt.translation + off), pts)
        assert shifted == pytest.approx(base, rel=1e-9)

    def test_adds_never_exceeds_add(self, rng):
        pts = rng.uniform(-0.05, 0.05, (40, 3))
        for _ in range(20):
            est, gt = random_pose(rng), random_pose(rng)
            assert adds_error(est, gt, pts) <= add_error(est, gt, pts) + 1e-12

    def test_adds_forgives_a_symmetric_rotation(self):
        # rotating a ring by exactly one point spacing permutes the points:
        # the matched metric sees a chord, the nearest-point metric sees ~0
        angles = np.arange(360) * (2.0 * np.pi / 360.0)
        ring = np.stack([0.05 * np.cos(angles), 0.05 * np.sin(angles),
                         np.zeros(360)], axis=1)
        est = Pose(exp_map(np.array([0.0, 0.0, 2.0 * np.pi / 360.0])), np.zeros(3))
        assert add_error(est, Pose.identity(), ring) > 5e-4
        assert adds_error(est, Pose.identity(), ring) < 1e-12

    def test_model_cloud_validation(self):
        with pytest.raises(InvalidArgumentError, match="model cloud"):
            add_error(Pose.identity(), Pose.identity(), np.zeros((0, 3)))
        with pytest.raises(InvalidArgumentError, match="model cloud"):
            adds_error(Pose.identity(), Pose.identity(), np.zeros((4, 2)))


def numeric_auc(errors, max_threshold, steps=20001):
    taus = np.linspace(0.0, max_threshold, steps)
    accuracy = [(np.asarray(errors) <= t).mean() for t in taus]
    return np.trapezoid(accuracy, taus) / max_threshold


class TestAuc:
    def test_single_error_hand_value(self):
        assert auc([0.05], max_threshold=0.1) == pytest.approx(0.5, rel=1e-12)

    def test_perfect_and_hopeless(self):
        assert auc([0.0, 0.0]) == 1.0
        assert auc([0.2, 0.5]) == 0.0

    def test_mixed_hand_value(self):
        assert auc([0.0, 0.05, 0.2], max_threshold=0.1) == pytest.approx(0.5, rel=1e-12)

    def test_matches_numeric_integration(self, rng):
        errors = rng.uniform(0.0, 0.15, 200)
        closed = auc(errors, max_threshold=0.1)
        assert closed == pytest.approx(numeric_auc(errors, 0.1), abs=2e-4)

    def test_monotone_in_max_threshold(self, rng):
        errors = rng.uniform(0.0, 0.2, 50)
        values = [auc(errors, max_threshold=t) for t in (0.05, 0.1, 0.2, 0.5)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_validation(self):
        with pytest.raises(InvalidArgumentError, match="non-empty"):
            auc([])
        with pytest.raises(InvalidArgumentError, match="finite"):
            auc([0.1, -0.2])
        with pytest.raises(InvalidArgumentError, match="finite"):
            auc([0.1, np.nan])
        with pytest.raises(InvalidArgumentError, match="max_threshold"):
            auc([0.1], max_threshold=0.0)


class TestCsv:
    def test_column_count_matches_row(self):
        sample = MetricSample("s", 0, "vita", 0.1, 0.1, 0.1, True, True, 1.0)
        assert len(sample.csv_row()) == len(CSV_COLUMNS)

    def test_row_formatting(self):
        sample = MetricSample(scene_id="synth-000001", frame=3, method="vita",
                              add=0.1234567891, adds=0.02, pe=np.nan,
                              feasible_before=True, feasible_after=False,
                              refine_ms=1.23456)
        row = sample.csv_row()
        assert row[0] == "synth-000001"
        assert row[1] == "3"
        assert row[2] == "vita"
        assert row[3] == "0.123456789"
        assert row[4] == "0.020000000"
        assert row[5] == "nan"
        assert row[6] == "true"
        assert row[7] == "false"
        assert row[8] == "1.235"
