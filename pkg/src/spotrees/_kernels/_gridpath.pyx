# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid shortest-path kernel.

Mirrors ``spotrees._kernels.reference.solve_grid_batch`` exactly: the same
additions and comparisons in the same order, so results are bit-identical.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def solve_grid_batch(costs, int width, int height, east, north):
    costs = np.ascontiguousarray(costs, dtype=np.float64)
    cdef double[:, ::1] c = costs
    cdef int[::1] e = np.ascontiguousarray(east, dtype=np.intc)
    cdef int[::1] no = np.ascontiguousarray(north, dtype=np.intc)
    cdef Py_ssize_t n_batch = c.shape[0]
    cdef Py_ssize_t d = c.shape[1]
    cdef int n_nodes = width * height

    values = np.zeros(n_batch, dtype=np.float64)
    paths = np.zeros((n_batch, d), dtype=np.float64)
    cdef double[::1] values_v = values
    cdef double[:, ::1] paths_v = paths

    # Per-call scratch (never shared between calls).
    cdef double[::1] value = np.zeros(n_nodes, dtype=np.float64)
    cdef unsigned char[::1] go_east = np.zeros(n_nodes, dtype=np.uint8)

    cdef Py_ssize_t b
    cdef int v, x, y, cur, step
    cdef double ve, vn
    cdef bint has_east, has_north

    for b in range(n_batch):
        value[n_nodes - 1] = 0.0
        for v in range(n_nodes - 2, -1, -1):
            y = v / width
            x = v - y * width
            has_east = x < width - 1
            has_north = y < height - 1
            if has_east and has_north:
                ve = c[b, e[v]] + value[v + 1]
                vn = c[b, no[v]] + value[v + width]
                if ve <= vn:
                    value[v] = ve
                    go_east[v] = 1
                else:
                    value[v] = vn
                    go_east[v] = 0
            elif has_east:
                value[v] = c[b, e[v]] + value[v + 1]
                go_east[v] = 1
            else:
                value[v] = c[b, no[v]] + value[v + width]
                go_east[v] = 0
        values_v[b] = value[0]
        cur = 0
        for step in range(width - 1 + height - 1):
            if go_east[cur]:
                paths_v[b, e[cur]] = 1.0
                cur = cur + 1
            else:
                paths_v[b, no[cur]] = 1.0
                cur = cur + width
    return values, paths
