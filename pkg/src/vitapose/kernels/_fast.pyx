# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled brute-force distance kernels.

Same arithmetic as the numpy backend: squared distances accumulate as
dx*dx + dy*dy + dz*dz in float64 and ties resolve to the lowest index,
so both backends return bit-identical results.
"""

import numpy as np

from libc.math cimport INFINITY


def nearest_neighbors(const double[:, ::1] queries, const double[:, ::1] points):
    """For each query row return (index, squared distance) of its nearest point."""
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t n = points.shape[0]
    if n == 0:
        raise ValueError("nearest_neighbors: empty point set")
    idx_arr = np.empty(m, dtype=np.int64)
    sq_arr = np.empty(m, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] sq = sq_arr
    cdef Py_ssize_t q, i, best_i
    cdef double qx, qy, qz, dx, dy, dz, d, best
    for q in range(m):
        qx = queries[q, 0]
        qy = queries[q, 1]
        qz = queries[q, 2]
        best = INFINITY
        best_i = 0
        for i in range(n):
            dx = qx - points[i, 0]
            dy = qy - points[i, 1]
            dz = qz - points[i, 2]
            d = dx * dx + dy * dy + dz * dz
            if d < best:
                best = d
                best_i = i
        idx[q] = best_i
        sq[q] = best
    return idx_arr, sq_arr


def min_pair(const double[:, ::1] a, const double[:, ::1] b):
    """Globally closest pair between two point sets.

    Returns (i, j, squared distance) with the lexicographically smallest
    (i, j) among ties.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0 or m == 0:
        raise ValueError("min_pair: empty point set")
    cdef Py_ssize_t i, j, best_i = 0, best_j = 0
    cdef double ax, ay, az, dx, dy, dz, d, best = INFINITY
    for i in range(n):
        ax = a[i, 0]
        ay = a[i, 1]
        az = a[i, 2]
        for j in range(m):
            dx = ax - b[j, 0]
            dy = ay - b[j, 1]
            dz = az - b[j, 2]
            d = dx * dx + dy * dy + dz * dz
            if d < best:
                best = d
                best_i = i
                best_j = j
    return best_i, best_j, best
