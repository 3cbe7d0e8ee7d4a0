"""Pure-numpy fallback for the compiled distance kernels.

Mirrors the compiled backend exactly: squared distances accumulate as
(dx*dx + dy*dy) + dz*dz in float64 (no |a|^2 + |b|^2 - 2ab factoring, which
rounds differently) and argmin takes the first occurrence, so results are
bit-identical between backends.
"""

import numpy as np

# Queries are processed in blocks to bound the (block, n) scratch allocations.
_BLOCK = 128


def _sq_dists(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    dx = queries[:, None, 0] - points[None, :, 0]
    dy = queries[:, None, 1] - points[None, :, 1]
    dz = queries[:, None, 2] - points[None, :, 2]
    return (dx * dx + dy * dy) + dz * dz


def nearest_neighbors(queries: np.ndarray, points: np.ndarray):
    """For each query row return (index, squared distance) of its nearest point."""
    if points.shape[0] == 0:
        raise ValueError("nearest_neighbors: empty point set")
    m = queries.shape[0]
    idx = np.empty(m, dtype=np.int64)
    sq = np.empty(m, dtype=np.float64)
    for start in range(0, m, _BLOCK):
        stop = min(start + _BLOCK, m)
        d = _sq_dists(queries[start:stop], points)
        best = np.argmin(d, axis=1)
        idx[start:stop] = best
        sq[start:stop] = d[np.arange(stop - start), best]
    return idx, sq


def min_pair(a: np.ndarray, b: np.ndarray):
    """Globally closest pair between two point sets.

    Returns (i, j, squared distance) with the lexicographically smallest
    (i, j) among ties.
    """
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("min_pair: empty point set")
    best_sq, best_i, best_j = np.inf, 0, 0
    for start in range(0, a.shape[0], _BLOCK):
        stop = min(start + _BLOCK, a.shape[0])
        d = _sq_dists(a[start:stop], b)
        flat = int(np.argmin(d))
        i, j = divmod(flat, d.shape[1])
        if d[i, j] < best_sq:
            best_sq, best_i, best_j = float(d[i, j]), start + i, j
    return best_i, best_j, best_sq
