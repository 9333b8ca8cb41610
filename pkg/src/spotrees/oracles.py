"""Decision oracles: solvers for the nominal optimization problem.

An oracle owns a fixed feasible region S and answers ``w*(c)`` / ``z*(c)``
queries for arbitrary cost vectors. Two families are provided: min-cost
monotone paths on a directed grid, and linear programs over a probability
simplex with extra inequality constraints. Both are deterministic, breaking
objective ties by lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Dataset, Decision, DimensionMismatch, InfeasibleProblem
from .simplex import solve_lp

FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class LinearRegion:
    """The feasible region S as explicit linear constraints.

    Used to embed per-leaf decision variables in the exact-training MILP:
    ``A_eq w = b_eq``, ``A_ub w <= b_ub``, ``lb <= w <= ub``.
    """

    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def contains(self, w: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        if self.A_eq.size and np.any(np.abs(self.A_eq @ w - self.b_eq) > tol):
            return False
        if self.A_ub.size and np.any(self.A_ub @ w - self.b_ub > tol):
            return False
        return bool(np.all(w >= self.lb - tol) and np.all(w <= self.ub + tol))


class DecisionOracle:
    """Contract shared by all decision oracles.

    Subclasses implement :meth:`solve_min` (and ideally a vectorized
    :meth:`solve_min_batch`); everything else has default implementations.
    Oracles are immutable after construction and safe to call concurrently.
    """

    decision_dim: int

    def _check_cost(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.decision_dim,):
            raise DimensionMismatch(
                f"cost vector has shape {c.shape}, expected ({self.decision_dim},)"
            )
        return c

    def solve_min(self, c: np.ndarray) -> Decision:
        raise NotImplementedError

    def optimal_value(self, c: np.ndarray) -> float:
        return self.solve_min(c).objective_value

    def solve_min_batch(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Optimal decisions and values for each row of C."""
        C = np.asarray(C, dtype=float)
        W = np.empty_like(C)
        z = np.empty(C.shape[0])
        for i in range(C.shape[0]):
            dec = self.solve_min(C[i])
            W[i] = dec.w
            z[i] = dec.objective_value
        return W, z

    def optimal_value_batch(self, C: np.ndarray) -> np.ndarray:
        return self.solve_min_batch(C)[1]

    def is_feasible(self, w: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        raise NotImplementedError

    def region(self) -> LinearRegion:
        raise NotImplementedError

    def value_bounds(self, data: Dataset | np.ndarray) -> tuple[float, float]:
        """Constants (M1, M2) with ``c_i @ w <= M1`` and ``-c_i @ w <= M2``.

        Computed through the optimal-value identities
        ``M1 = max(max_i -z*(-c_i), 0)`` and ``M2 = max(max_i -z*(c_i), 0)``,
        valid for every row i and every feasible w.
        """
        C = data.C if isinstance(data, Dataset) else np.asarray(data, dtype=float)
        if C.ndim != 2 or C.shape[0] == 0:
            raise DimensionMismatch("value_bounds needs a nonempty cost matrix")
        m1 = float(np.max(-self.optimal_value_batch(-C)))
        m2 = float(np.max(-self.optimal_value_batch(C)))
        return max(m1, 0.0), max(m2, 0.0)


def value_bounds(data: Dataset | np.ndarray, oracle: DecisionOracle) -> tuple[float, float]:
    return oracle.value_bounds(data)


def grid_edge_maps(width: int, height: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Edge indexing for a ``width x height`` node grid.

    Nodes are row-major from the southwest corner; each node contributes its
    east edge then its north edge, skipping directions that leave the grid.
    Returns (east, north, n_edges) where east[v] / north[v] are edge ids or -1.
    """
    n_nodes = width * height
    east = np.full(n_nodes, -1, dtype=np.intc)
    north = np.full(n_nodes, -1, dtype=np.intc)
    edge = 0
    for v in range(n_nodes):
        x = v % width
        y = v // width
        if x < width - 1:
            east[v] = edge
            edge += 1
        if y < height - 1:
            north[v] = edge
            edge += 1
    return east, north, edge


class GridShortestPathOracle(DecisionOracle):
    """Min-cost monotone path from the southwest to the northeast corner.

    Decisions are 0/1 edge incidence vectors; ``width`` and ``height`` count
    nodes per side (the default 4x4 grid has 24 directed edges).
    """

    def __init__(self, width: int = 4, height: int = 4):
        if width < 2 or height < 2:
            raise ValueError("grid needs at least 2x2 nodes")
        self.width = width
        self.height = height
        self.east, self.north, self.decision_dim = grid_edge_maps(width, height)
        self.path_edges = (width - 1) + (height - 1)

    def solve_min(self, c: np.ndarray) -> Decision:
        c = self._check_cost(c)
        values, paths = _kernels.solve_grid_batch(
            c.reshape(1, -1), self.width, self.height, self.east, self.north
        )
        return Decision(w=paths[0], objective_value=float(values[0]))

    def solve_min_batch(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[1] != self.decision_dim:
            raise DimensionMismatch(f"expected (n, {self.decision_dim}) costs")
        values, paths = _kernels.solve_grid_batch(
            C, self.width, self.height, self.east, self.north
        )
        return paths, values

    def is_feasible(self, w: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.decision_dim,):
            return False
        binary = np.all(np.minimum(np.abs(w), np.abs(w - 1.0)) <= tol)
        return bool(binary) and self.region().contains(w, tol)

    def region(self) -> LinearRegion:
        n_nodes = self.width * self.height
        d = self.decision_dim
        A = np.zeros((n_nodes, d))
        b = np.zeros(n_nodes)
        b[0] = 1.0
        b[-1] = -1.0
        for v in range(n_nodes):
            x = v % self.width
            y = v // self.width
            if self.east[v] >= 0:
                A[v, self.east[v]] = 1.0
            if self.north[v] >= 0:
                A[v, self.north[v]] = 1.0
            if x > 0:
                A[v, self.east[v - 1]] = -1.0
            if y > 0:
                A[v, self.north[v - self.width]] = -1.0
        return LinearRegion(
            A_eq=A,
            b_eq=b,
            A_ub=np.zeros((0, d)),
            b_ub=np.zeros(0),
            lb=np.zeros(d),
            ub=np.ones(d),
        )


class PolytopeLpOracle(DecisionOracle):
    """LP oracle over ``{w >= 0, sum(w) = 1, a_m @ w <= b_m}``.

    Construction verifies that the uniform point ``e/d`` satisfies the extra
    constraints, which certifies feasibility of the region. ``solve_max``
    supports maximization problems by negating the cost internally.
    """

    def __init__(self, d: int, A_ub: np.ndarray | None = None, b_ub: np.ndarray | None = None):
        if d < 1:
            raise ValueError("decision dimension must be positive")
        self.decision_dim = int(d)
        if A_ub is None:
            A_ub = np.zeros((0, d))
            b_ub = np.zeros(0)
        self.A_ub = np.ascontiguousarray(A_ub, dtype=float).reshape(-1, d)
        self.b_ub = np.ascontiguousarray(b_ub, dtype=float).reshape(-1)
        if self.A_ub.shape[0] != self.b_ub.shape[0]:
            raise DimensionMismatch("A_ub and b_ub row counts differ")
        if not (np.all(np.isfinite(self.A_ub)) and np.all(np.isfinite(self.b_ub))):
            raise ValueError("constraints must be finite")
        uniform = np.full(d, 1.0 / d)
        if self.A_ub.size and np.any(self.A_ub @ uniform > self.b_ub + FEASIBILITY_TOL):
            raise InfeasibleProblem(
                "uniform point e/d violates the constraint set; region not certified feasible"
            )

    @property
    def n_constraints(self) -> int:
        return self.A_ub.shape[0]

    def solve_min(self, c: np.ndarray) -> Decision:
        c = self._check_cost(c)
        if self.n_constraints == 0:
            # Pure simplex: the optimum is the lowest-index minimizing vertex.
            k = int(np.argmin(c))
            w = np.zeros(self.decision_dim)
            w[k] = 1.0
            return Decision(w=w, objective_value=float(c[k]))
        w, value = solve_lp(
            c,
            self.A_ub,
            self.b_ub,
            np.ones((1, self.decision_dim)),
            np.ones(1),
        )
        return Decision(w=w, objective_value=value)

    def solve_min_batch(self, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[1] != self.decision_dim:
            raise DimensionMismatch(f"expected (n, {self.decision_dim}) costs")
        if self.n_constraints == 0:
            ks = np.argmin(C, axis=1)
            W = np.zeros_like(C)
            W[np.arange(C.shape[0]), ks] = 1.0
            return W, C[np.arange(C.shape[0]), ks].astype(float)
        return super().solve_min_batch(C)

    def solve_max(self, p: np.ndarray) -> Decision:
        """Maximize ``p @ w`` over the region (implemented as min of ``-p``)."""
        dec = self.solve_min(-np.asarray(p, dtype=float))
        return Decision(w=dec.w, objective_value=-dec.objective_value)

    def is_feasible(self, w: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.decision_dim,):
            return False
        return self.region().contains(w, tol)

    def region(self) -> LinearRegion:
        d = self.decision_dim
        return LinearRegion(
            A_eq=np.ones((1, d)),
            b_eq=np.ones(1),
            A_ub=self.A_ub.copy(),
            b_ub=self.b_ub.copy(),
            lb=np.zeros(d),
            ub=np.ones(d),
        )


def save_constraints(path, A_ub: np.ndarray, b_ub: np.ndarray) -> None:
    """Write a constraint set: dimension, then one ``a_m b_m`` row per line."""
    A_ub = np.asarray(A_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"{A_ub.shape[1]}\n")
        for row, rhs in zip(A_ub, b_ub):
            fh.write(" ".join(repr(float(v)) for v in row) + f" {float(rhs)!r}\n")


def load_constraints(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"empty constraint file {path}")
    d = int(lines[0])
    rows = [[float(tok) for tok in ln.split()] for ln in lines[1:]]
    for row in rows:
        if len(row) != d + 1:
            raise ValueError(f"constraint rows must have {d + 1} values")
    if not rows:
        return np.zeros((0, d)), np.zeros(0)
    mat = np.array(rows)
    return mat[:, :d], mat[:, d]
