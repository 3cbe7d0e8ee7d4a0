"""Pose-error metrics and their threshold-curve summary."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError
from .geometry import Pose

DEFAULT_AUC_MAX_THRESHOLD = 0.1  # meters

# Column order of per-frame tracking CSV output.
CSV_COLUMNS = ("scene_id", "frame", "method", "add", "adds", "pe",
               "feasible_before", "feasible_after", "refine_ms")


def _model_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise InvalidArgumentError(f"need a non-empty (n, 3) model cloud, got {pts.shape}")
    return pts


def add_error(estimated: Pose, ground_truth: Pose, model_points: np.ndarray) -> float:
    """Mean distance between matched model points under the two poses."""
    pts = _model_points(model_points)
    return float(np.linalg.norm(estimated.apply(pts) - ground_truth.apply(pts),
                                axis=1).mean())


def adds_error(estimated: Pose, ground_truth: Pose, model_points: np.ndarray) -> float:
    """Mean nearest-point distance; the symmetric-object variant of add_error."""
    pts = _model_points(model_points)
    _, sq = kernels.nearest_neighbors(estimated.apply(pts), ground_truth.apply(pts))
    return float(np.sqrt(sq).mean())


def position_error(estimated: Pose, ground_truth: Pose) -> float:
    """Euclidean distance between the two translations."""
    return float(np.linalg.norm(estimated.translation - ground_truth.translation))


def auc(errors, max_threshold: float = DEFAULT_AUC_MAX_THRESHOLD) -> float:
    """Area under the accuracy-vs-threshold curve, normalized to [0, 1].

    accuracy(tau) is the fraction of errors <= tau; integrating it over
    [0, max_threshold] gives the exact closed form
    sum(max(0, max_threshold - e)) / (n * max_threshold).
    """
    errs = np.asarray(errors, dtype=np.float64)
    if errs.ndim != 1 or errs.shape[0] == 0:
        raise InvalidArgumentError("auc needs a non-empty flat error array")
    if np.any(errs < 0) or not np.all(np.isfinite(errs)):
        raise InvalidArgumentError("errors must be finite and non-negative")
    if max_threshold <= 0:
        raise InvalidArgumentError("max_threshold must be positive")
    return float(np.maximum(max_threshold - errs, 0.0).sum()
                 / (errs.shape[0] * max_threshold))


@dataclass(frozen=True)
class MetricSample:
    """One tracking frame's worth of CSV output."""

    scene_id: str
    frame: int
    method: str
    add: float
    adds: float
    pe: float
    feasible_before: bool
    feasible_after: bool
    refine_ms: float

    def csv_row(self) -> list:
        return [self.scene_id, str(self.frame), self.method,
                f"{self.add:.9f}", f"{self.adds:.9f}", f"{self.pe:.9f}",
                str(self.feasible_before).lower(), str(self.feasible_after).lower(),
                f"{self.refine_ms:.3f}"]
