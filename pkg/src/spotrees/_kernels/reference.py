"""NumPy implementation of the grid shortest-path kernel.

This is the fallback used when the compiled extension is unavailable. Both
implementations must produce bit-identical values: the recursion is a fixed
sequence of additions and comparisons, evaluated in the same order.
"""

from __future__ import annotations

import numpy as np


def solve_grid_batch(
    costs: np.ndarray,
    width: int,
    height: int,
    east: np.ndarray,
    north: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Min-cost monotone (east/north) paths for a batch of edge-cost vectors.

    ``east[v]`` / ``north[v]`` give the edge index leaving node ``v`` (row-major,
    southwest origin) in that direction, -1 at the boundary. Returns the path
    values and 0/1 edge incidence vectors, one row per batch element. Ties
    prefer the east edge, which has the lower edge index.
    """
    costs = np.ascontiguousarray(costs, dtype=float)
    n_batch, d = costs.shape
    n_nodes = width * height
    value = np.zeros((n_batch, n_nodes))
    go_east = np.zeros((n_batch, n_nodes), dtype=bool)

    for v in range(n_nodes - 2, -1, -1):
        x = v % width
        y = v // width
        has_east = x < width - 1
        has_north = y < height - 1
        if has_east and has_north:
            ve = costs[:, east[v]] + value[:, v + 1]
            vn = costs[:, north[v]] + value[:, v + width]
            ge = ve <= vn
            value[:, v] = np.where(ge, ve, vn)
            go_east[:, v] = ge
        elif has_east:
            value[:, v] = costs[:, east[v]] + value[:, v + 1]
            go_east[:, v] = True
        else:
            value[:, v] = costs[:, north[v]] + value[:, v + width]

    paths = np.zeros((n_batch, d))
    rows = np.arange(n_batch)
    cur = np.zeros(n_batch, dtype=np.int64)
    for _ in range(width - 1 + height - 1):
        ge = go_east[rows, cur]
        edge = np.where(ge, east[cur], north[cur])
        paths[rows, edge] = 1.0
        cur = np.where(ge, cur + 1, cur + width)
    return value[:, 0].copy(), paths
