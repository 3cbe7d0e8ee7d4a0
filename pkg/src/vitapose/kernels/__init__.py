"""Distance kernels with a compiled core and a pure-numpy fallback.

The compiled backend is used when the extension module built; set
VITAPOSE_FORCE_PYTHON=1 to force the fallback. Both backends take float64
C-contiguous (n, 3) arrays, return squared distances, and break ties toward
the lowest index, with bit-identical results.
"""

import os

import numpy as np

from . import _numpy_backend

try:
    from . import _fast as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_BACKENDS = {"python": _numpy_backend}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("VITAPOSE_FORCE_PYTHON") == "1" or _compiled is None:
    _active = _numpy_backend
else:
    _active = _compiled


def backend_name() -> str:
    """Name of the backend currently answering kernel calls."""
    return "compiled" if _active is _compiled else "python"


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def use_backend(name: str) -> None:
    """Switch the active backend; used by the benchmark to compare both."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {sorted(_BACKENDS)}")
    _active = _BACKENDS[name]


def _as_points(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array, got shape {arr.shape}")
    return out


def _non_empty(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("kernel inputs must be non-empty point sets")


def nearest_neighbors(queries: np.ndarray, points: np.ndarray):
    """Index and squared distance of the nearest point for every query row."""
    queries, points = _as_points(queries), _as_points(points)
    _non_empty(queries, points)
    return _active.nearest_neighbors(queries, points)


def min_pair(queries: np.ndarray, points: np.ndarray):
    """(i, j, squared distance) of the globally closest pair between two sets."""
    queries, points = _as_points(queries), _as_points(points)
    _non_empty(queries, points)
    return _active.min_pair(queries, points)
