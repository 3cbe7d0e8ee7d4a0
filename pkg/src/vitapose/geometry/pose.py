"""Rigid transforms and their small-correction parameterization."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError
from .rotation import exp_map

ORTHONORMAL_TOL = 1e-9


def _frozen_array(values, shape, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise InvalidArgumentError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Pose:
    """Rigid transform: p -> rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = _frozen_array(self.rotation, (3, 3), "rotation")
        t = _frozen_array(self.translation, (3,), "translation")
        if not np.allclose(r.T @ r, np.eye(3), atol=ORTHONORMAL_TOL):
            raise InvalidArgumentError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-6:
            raise InvalidArgumentError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """Pose applying `other` first, then self."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one (3,) point or an (n, 3) block of points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate directions without translating (normals, axes)."""
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T

    def to_dict(self) -> dict:
        return {"rotation": [float(x) for x in self.rotation.reshape(-1)],
                "translation": [float(x) for x in self.translation]}

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        try:
            rotation = np.array(data["rotation"], dtype=np.float64).reshape(3, 3)
            translation = data["translation"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"bad pose dict: {exc}") from exc
        return cls(rotation, translation)


@dataclass(frozen=True)
class DeltaPose:
    """Correction transform parameterized as (rotation_vector, translation)."""

    rotation_vector: np.ndarray = field(default_factory=lambda: np.zeros(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation_vector",
                           _frozen_array(self.rotation_vector, (3,), "rotation_vector"))
        object.__setattr__(self, "translation",
                           _frozen_array(self.translation, (3,), "translation"))

    @classmethod
    def zero(cls) -> "DeltaPose":
        return cls()

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "DeltaPose":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (6,):
            raise InvalidArgumentError(f"delta vector must have shape (6,), got {v.shape}")
        return cls(v[:3], v[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rotation_vector, self.translation])

    def as_pose(self) -> Pose:
        return Pose(exp_map(self.rotation_vector), self.translation)

    def to_dict(self) -> dict:
        return {"rotation_vector": [float(x) for x in self.rotation_vector],
                "translation": [float(x) for x in self.translation]}
