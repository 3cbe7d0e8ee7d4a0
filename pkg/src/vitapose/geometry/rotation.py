"""Rotation-vector algebra: exponential map and its exact differential."""

import numpy as np

from ..errors import InvalidArgumentError

# Below this angle the Rodrigues coefficients switch to their Taylor series.
SMALL_ANGLE = 1e-8
# Below this angle the right Jacobian switches to its series form.
JACOBIAN_SMALL_ANGLE = 1e-6


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_map(rotation_vector: np.ndarray) -> np.ndarray:
    """Rotation matrix for an angle-axis vector (Rodrigues formula).

    Uses second-order Taylor coefficients below SMALL_ANGLE so the map is
    smooth through zero.
    """
    w = np.asarray(rotation_vector, dtype=np.float64)
    if w.shape != (3,):
        raise InvalidArgumentError(f"rotation vector must have shape (3,), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("rotation vector must be finite")
    theta = float(np.linalg.norm(w))
    if theta < SMALL_ANGLE:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / (theta * theta)
    k = skew(w)
    return np.eye(3) + a * k + b * (k @ k)


def right_jacobian(rotation_vector: np.ndarray) -> np.ndarray:
    """Right Jacobian of the exponential map.

    Relates a perturbation of the rotation vector to the body-frame angular
    change: exp(w + dw) ~= exp(w) @ exp(right_jacobian(w) @ dw). Series form
    below JACOBIAN_SMALL_ANGLE.
    """
    w = np.asarray(rotation_vector, dtype=np.float64)
    theta = float(np.linalg.norm(w))
    theta2 = theta * theta
    if theta < JACOBIAN_SMALL_ANGLE:
        b = 0.5 - theta2 / 24.0
        c = 1.0 / 6.0 - theta2 / 120.0
    else:
        b = (1.0 - np.cos(theta)) / theta2
        c = (theta - np.sin(theta)) / (theta2 * theta)
    k = skew(w)
    return np.eye(3) - b * k + c * (k @ k)
