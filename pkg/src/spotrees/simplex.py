"""Dense two-phase primal simplex with Bland's rule.

Small and deterministic: Bland's lowest-index entering rule (with lowest
basis-index tie-breaking on the ratio test) cannot cycle, and the pivot
sequence is a pure function of the inputs. Intended for the problem sizes
this package meets (tens of variables and constraints), not as a general
purpose LP code.
"""

from __future__ import annotations

import numpy as np

from .core import InfeasibleProblem, SpotreesError

_PIVOT_TOL = 1e-10
_COST_TOL = 1e-9
_MAX_ITER = 50_000


class SimplexFailure(SpotreesError, RuntimeError):
    pass


def _run_simplex(T: np.ndarray, basis: np.ndarray, obj: np.ndarray, allowed: int):
    """Pivot ``T`` (rows of [A | b]) to optimality for reduced-cost row ``obj``.

    ``obj`` has length T.shape[1]; its last entry accumulates -objective.
    Only columns with index < ``allowed`` may enter the basis.
    """
    m = T.shape[0]
    for _ in range(_MAX_ITER):
        enter = -1
        for j in range(allowed):
            if obj[j] < -_COST_TOL:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best_ratio = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > _PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best_ratio - _PIVOT_TOL or (
                    abs(ratio - best_ratio) <= _PIVOT_TOL
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise SimplexFailure("LP is unbounded")
        piv = T[leave, enter]
        T[leave] /= piv
        for i in range(m):
            if i != leave and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[leave]
        if obj[enter] != 0.0:
            obj -= obj[enter] * T[leave]
        basis[leave] = enter
    raise SimplexFailure("simplex iteration limit exceeded")


def solve_lp(
    c: np.ndarray,
    A_ub: np.ndarray,
    b_ub: np.ndarray,
    A_eq: np.ndarray,
    b_eq: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    Returns an optimal basic feasible solution and its objective value.
    Raises :class:`InfeasibleProblem` when no feasible point exists and
    :class:`SimplexFailure` on an unbounded problem.
    """
    c = np.asarray(c, dtype=float)
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, c.size)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, c.size)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)

    n = c.size
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq

    # Standard form: structural vars, one slack per inequality, then one
    # artificial per row that lacks an identity column after sign-flipping.
    A = np.zeros((m, n + m_ub))
    b = np.zeros(m)
    A[:m_ub, :n] = A_ub
    A[:m_ub, n : n + m_ub] = np.eye(m_ub)
    b[:m_ub] = b_ub
    A[m_ub:, :n] = A_eq
    b[m_ub:] = b_eq

    need_artificial = np.zeros(m, dtype=bool)
    need_artificial[m_ub:] = True
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            need_artificial[i] = True

    art_rows = np.flatnonzero(need_artificial)
    n_art = art_rows.size
    n_cols = n + m_ub + n_art
    T = np.zeros((m, n_cols + 1))
    T[:, : n + m_ub] = A
    T[:, -1] = b
    basis = np.zeros(m, dtype=np.int64)
    for i in range(m_ub):
        basis[i] = n + i
    for k, i in enumerate(art_rows):
        T[i, n + m_ub + k] = 1.0
        basis[i] = n + m_ub + k

    if n_art:
        # Phase 1: minimize the sum of artificials.
        obj = np.zeros(n_cols + 1)
        obj[n + m_ub :] = [1.0] * n_art + [0.0]
        for i in art_rows:
            obj -= T[i]
        _run_simplex(T, basis, obj, allowed=n_cols)
        if -obj[-1] > 1e-7:
            raise InfeasibleProblem("LP constraint set is infeasible")
        # Pivot any artificial still in the basis out (or drop redundant rows).
        for i in range(m):
            if basis[i] >= n + m_ub:
                piv = -1
                for j in range(n + m_ub):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        piv = j
                        break
                if piv < 0:
                    T[i, :] = 0.0
                    continue
                T[i] /= T[i, piv]
                for r in range(m):
                    if r != i and T[r, piv] != 0.0:
                        T[r] -= T[r, piv] * T[i]
                basis[i] = piv

    obj = np.zeros(n_cols + 1)
    obj[:n] = c
    for i in range(m):
        if basis[i] < n + m_ub and obj[basis[i]] != 0.0:
            obj -= obj[basis[i]] * T[i]
    _run_simplex(T, basis, obj, allowed=n + m_ub)

    x = np.zeros(n + m_ub)
    for i in range(m):
        if basis[i] < n + m_ub:
            x[basis[i]] = T[i, -1]
    solution = x[:n]
    return solution, float(c @ solution)
