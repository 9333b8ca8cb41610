"""Exact tree training: MILP formulation and desk-scale exhaustive search.

The MILP encodes training a complete depth-H tree to global optimality:
per-row leaf assignment indicators, per-leaf decision variables constrained
to the oracle's feasible region, big-M linearization of the assignment/cost
product, and the split-structure constraints that force assignments to
follow threshold routing. No solver is embedded; models are exported in MPS
interchange format and externally produced solutions can be decoded back
into trees. ``exhaustive_exact`` solves the same optimization by enumeration
over the quantile candidate-split scheme, and serves as the optimality
reference at small scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import (
    Dataset,
    DegenerateData,
    InfeasibleProblem,
    Node,
    SplitRule,
    SpotreesError,
    Tree,
)
from .greedy import GreedyConfig, _GreedyTrainer
from .oracles import DecisionOracle


class EnumerationTooLarge(SpotreesError, ValueError):
    pass


@dataclass(frozen=True)
class ExactConfig:
    """Exact-training parameters.

    ``alpha`` penalizes active splits in the objective (0 by default; pruning
    is the preferred regularizer). ``feature_rounding`` optionally snaps
    features to a grid before building the MILP, which enlarges the epsilon
    constants and speeds up external solvers; it is off by default because it
    changes row routing and therefore breaks exact warm-start objective
    equality with trees trained on the unrounded data. ``time_limit`` is
    advisory metadata for external solvers (seconds); nothing here enforces it.
    """

    depth: int = 1
    min_leaf_weight: float = 20.0
    alpha: float = 0.0
    feature_rounding: float | None = None
    n_quantiles: int = 100
    time_limit: float | None = None
    warm_start_tree: Tree | None = None
    enumeration_guard: float = 1e7
    improvement_tol: float = 1e-9

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("exact training needs depth >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "continuous"
    lb: float = 0.0
    ub: float = math.inf


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    idx: np.ndarray
    coef: np.ndarray
    sense: str  # "<=" | ">=" | "="
    rhs: float

    def lhs(self, x: np.ndarray) -> float:
        return float(self.coef @ x[self.idx])


@dataclass
class ModelMeta:
    """Index maps from tree semantics to variable positions, plus the data
    the model was built from (needed by warm start and solution decoding)."""

    n: int
    p: int
    d: int
    depth: int
    n_leaves: int
    n_branch: int
    r: np.ndarray  # (n, L) variable indices
    y: np.ndarray  # (n, L)
    w: np.ndarray  # (L, d)
    a: np.ndarray  # (p, B)
    b: np.ndarray  # (B,)
    dvar: np.ndarray  # (B,)
    k: np.ndarray  # (L,)
    eps: np.ndarray  # (p,)
    eps_max: float
    m1: float
    m2: float
    alpha: float
    min_leaf_weight: float
    zstar: np.ndarray  # (n,)
    X_model: np.ndarray  # features as used in the constraints (possibly rounded)
    dataset: Dataset
    oracle: DecisionOracle
    left_ancestors: list[list[int]]  # per leaf, branch positions (1-based)
    right_ancestors: list[list[int]]


@dataclass
class MilpModel:
    variables: list[Variable]
    constraints: list[LinearConstraint]
    objective: np.ndarray
    objective_constant: float
    meta: ModelMeta

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def variable_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.objective @ x) + self.objective_constant


def _leaf_ancestors(depth: int) -> tuple[list[list[int]], list[list[int]]]:
    # Heap positions: branches 1..B, leaves at positions L..2L-1 (index pos - B).
    n_leaves = 2**depth
    lefts, rights = [], []
    for leaf in range(1, n_leaves + 1):
        pos = (n_leaves - 1) + leaf
        a_l, a_r = [], []
        while pos > 1:
            parent = pos // 2
            (a_l if pos % 2 == 0 else a_r).append(parent)
            pos = parent
        lefts.append(a_l)
        rights.append(a_r)
    return lefts, rights


def _feature_epsilons(X: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest nonzero gap between observed values, per feature (1.0 when
    the feature is constant)."""
    eps = np.ones(X.shape[1])
    for j in range(X.shape[1]):
        u = np.unique(X[:, j])
        if u.size > 1:
            eps[j] = float(np.min(np.diff(u)))
    return eps, float(eps.max())


def build_milp(train: Dataset, config: ExactConfig, oracle: DecisionOracle) -> MilpModel:
    """Assemble the exact-training MILP for a complete depth-H tree.

    Requires numeric features in [0, 1] (binarize categoricals first). The
    optimum of the model equals the minimum over depth-H trees of the
    normalized training SPO loss, plus ``alpha`` times the active-split count.
    """
    if train.n == 0:
        raise DegenerateData("cannot build a model from an empty dataset")
    if train.categorical is not None and train.categorical.any():
        raise ValueError("categorical features must be binarized before exact training")
    if np.any(train.X < -1e-12) or np.any(train.X > 1 + 1e-12):
        raise ValueError("exact training requires features in [0, 1]")

    X = train.X
    if config.feature_rounding:
        X = np.round(X / config.feature_rounding) * config.feature_rounding
        X = np.clip(X, 0.0, 1.0)
    n, p = X.shape
    d = train.decision_dim
    H = config.depth
    L = 2**H
    B = L - 1

    region = oracle.region()
    m1, m2 = oracle.value_bounds(train)
    zstar = oracle.optimal_value_batch(train.C)
    eps, eps_max = _feature_epsilons(X)
    weights = train.weights
    total_weight = train.total_weight

    variables: list[Variable] = []

    def add_block(shape, namer, kind, lb=0.0, ub=math.inf) -> np.ndarray:
        idx = np.empty(shape, dtype=np.int64)
        for pos in np.ndindex(*shape):
            idx[pos] = len(variables)
            variables.append(Variable(namer(*pos), kind, lb, ub))
        return idx

    r_idx = add_block((n, L), lambda i, l: f"r_{i + 1}_{l + 1}", "binary", 0.0, 1.0)
    y_idx = add_block((n, L), lambda i, l: f"y_{i + 1}_{l + 1}", "continuous", -m2)
    w_idx = np.empty((L, d), dtype=np.int64)
    for l in range(L):
        for kdim in range(d):
            w_idx[l, kdim] = len(variables)
            variables.append(
                Variable(
                    f"w_{l + 1}_{kdim + 1}",
                    "continuous",
                    float(region.lb[kdim]),
                    float(region.ub[kdim]),
                )
            )
    a_idx = np.empty((p, B), dtype=np.int64)
    for t in range(B):
        for j in range(p):
            a_idx[j, t] = len(variables)
            variables.append(Variable(f"a_{j + 1}_{t + 1}", "binary", 0.0, 1.0))
    b_idx = add_block((B,), lambda t: f"b_{t + 1}", "continuous", 0.0, 1.0)
    d_idx = add_block((B,), lambda t: f"d_{t + 1}", "binary", 0.0, 1.0)
    k_idx = add_block((L,), lambda l: f"k_{l + 1}", "binary", 0.0, 1.0)

    constraints: list[LinearConstraint] = []

    def add(name, idx, coef, sense, rhs):
        constraints.append(
            LinearConstraint(
                name,
                np.asarray(idx, dtype=np.int64),
                np.asarray(coef, dtype=float),
                sense,
                float(rhs),
            )
        )

    # Each row lands in exactly one leaf; only nonempty leaves count; nonempty
    # leaves carry at least the minimum weight.
    for i in range(n):
        add(f"assign_{i + 1}", r_idx[i], np.ones(L), "=", 1.0)
    for i in range(n):
        for l in range(L):
            add(f"leafuse_{i + 1}_{l + 1}", [r_idx[i, l], k_idx[l]], [1.0, -1.0], "<=", 0.0)
    for l in range(L):
        add(
            f"minleaf_{l + 1}",
            list(r_idx[:, l]) + [k_idx[l]],
            list(weights) + [-config.min_leaf_weight],
            ">=",
            0.0,
        )

    lefts, rights = _leaf_ancestors(H)
    for l in range(L):
        for t in rights[l]:
            for i in range(n):
                # a_t^T x_i >= b_t - (1 - r_il)
                add(
                    f"routeright_{l + 1}_{i + 1}_{t}",
                    list(a_idx[:, t - 1]) + [b_idx[t - 1], r_idx[i, l]],
                    list(X[i]) + [-1.0, -1.0],
                    ">=",
                    -1.0,
                )
        for t in lefts[l]:
            for i in range(n):
                # a_t^T (x_i + eps) <= b_t + (1 + eps_max)(1 - r_il)
                add(
                    f"routeleft_{l + 1}_{i + 1}_{t}",
                    list(a_idx[:, t - 1]) + [b_idx[t - 1], r_idx[i, l]],
                    list(X[i] + eps) + [-1.0, 1.0 + eps_max],
                    "<=",
                    1.0 + eps_max,
                )

    for t in range(B):
        add(f"onehot_{t + 1}", list(a_idx[:, t]) + [d_idx[t]], [1.0] * p + [-1.0], "=", 0.0)
        # Inactive branch nodes pin b to 1 so the right-route constraint is
        # unsatisfiable and rows fall through to the left.
        add(f"bmin_{t + 1}", [b_idx[t], d_idx[t]], [1.0, 1.0], ">=", 1.0)
    for t in range(2, B + 1):
        add(f"parent_{t}", [d_idx[t - 1], d_idx[t // 2 - 1]], [1.0, -1.0], "<=", 0.0)

    C = train.C
    for i in range(n):
        for l in range(L):
            add(
                f"bigm1_{i + 1}_{l + 1}",
                [y_idx[i, l]] + list(w_idx[l]) + [r_idx[i, l]],
                [1.0] + list(-C[i]) + [-m1],
                ">=",
                -m1,
            )
            add(
                f"bigm2_{i + 1}_{l + 1}",
                [y_idx[i, l], r_idx[i, l]],
                [1.0, m2],
                ">=",
                0.0,
            )
    # Keeps the LP relaxation bounded below by zero per row.
    for i in range(n):
        add(f"lpbound_{i + 1}", y_idx[i], np.ones(L), ">=", float(zstar[i]))

    for l in range(L):
        for q in range(region.A_eq.shape[0]):
            row = region.A_eq[q]
            nz = np.flatnonzero(row)
            add(f"regeq_{l + 1}_{q + 1}", w_idx[l][nz], row[nz], "=", float(region.b_eq[q]))
        for q in range(region.A_ub.shape[0]):
            row = region.A_ub[q]
            nz = np.flatnonzero(row)
            add(f"regub_{l + 1}_{q + 1}", w_idx[l][nz], row[nz], "<=", float(region.b_ub[q]))

    objective = np.zeros(len(variables))
    for i in range(n):
        objective[y_idx[i]] = weights[i] / total_weight
    objective[d_idx] = config.alpha
    constant = -float(weights @ zstar) / total_weight

    meta = ModelMeta(
        n=n,
        p=p,
        d=d,
        depth=H,
        n_leaves=L,
        n_branch=B,
        r=r_idx,
        y=y_idx,
        w=w_idx,
        a=a_idx,
        b=b_idx,
        dvar=d_idx,
        k=k_idx,
        eps=eps,
        eps_max=eps_max,
        m1=m1,
        m2=m2,
        alpha=config.alpha,
        min_leaf_weight=config.min_leaf_weight,
        zstar=zstar,
        X_model=X,
        dataset=train,
        oracle=oracle,
        left_ancestors=lefts,
        right_ancestors=rights,
    )
    return MilpModel(variables, constraints, objective, constant, meta)


def check_assignment(model: MilpModel, x: np.ndarray, tol: float = 1e-6) -> list[str]:
    """All constraint/bound/integrality violations of an assignment."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_variables,):
        raise ValueError(f"assignment must have {model.n_variables} entries")
    violations = []
    for i, var in enumerate(model.variables):
        if x[i] < var.lb - tol or x[i] > var.ub + tol:
            violations.append(f"bound {var.name}={x[i]!r} outside [{var.lb}, {var.ub}]")
        if var.kind == "binary" and min(abs(x[i]), abs(x[i] - 1.0)) > tol:
            violations.append(f"integrality {var.name}={x[i]!r}")
    for con in model.constraints:
        lhs = con.lhs(x)
        if con.sense == "<=" and lhs > con.rhs + tol:
            violations.append(f"{con.name}: {lhs!r} <= {con.rhs!r} violated")
        elif con.sense == ">=" and lhs < con.rhs - tol:
            violations.append(f"{con.name}: {lhs!r} >= {con.rhs!r} violated")
        elif con.sense == "=" and abs(lhs - con.rhs) > tol:
            violations.append(f"{con.name}: {lhs!r} == {con.rhs!r} violated")
    return violations


def warm_start(model: MilpModel, tree: Tree) -> np.ndarray:
    """Embed a trained tree as a feasible assignment of the model.

    The tree's rules are re-applied to the model's feature matrix, so with
    unrounded features the assignment reproduces the training partition and
    its objective equals the tree's training SPO loss plus the alpha term.
    Splits that route every model row to one side are embedded as inactive
    branches (identical routing).
    """
    meta = model.meta
    if tree.depth > meta.depth:
        raise ValueError(f"tree depth {tree.depth} exceeds model depth {meta.depth}")
    x = np.zeros(model.n_variables)
    x[meta.b] = 1.0  # inactive default; overwritten for active splits
    root_w = tree.root.decision.w
    for l in range(meta.n_leaves):
        x[meta.w[l]] = root_w

    X = meta.X_model
    C = meta.dataset.C

    def leftmost_leaf(pos: int, depth: int) -> int:
        return pos * (2 ** (meta.depth - depth)) - (meta.n_leaves - 1) - 1

    def embed(node: Node, pos: int, depth: int, rows: np.ndarray) -> None:
        if rows.size == 0:
            return
        if node.is_leaf:
            l = leftmost_leaf(pos, depth)
            x[meta.r[rows, l]] = 1.0
            x[meta.k[l]] = 1.0
            x[meta.w[l]] = node.decision.w
            x[meta.y[rows, l]] = C[rows] @ node.decision.w
            return
        if node.rule.kind != "numeric":
            raise ValueError("exact models require numeric (binarized) features")
        j = node.rule.feature_index
        mask = X[rows, j] <= node.rule.value
        left_rows, right_rows = rows[mask], rows[~mask]
        if right_rows.size == 0:
            # Degenerate on the model's features (possible after rounding):
            # skip the split, keeping the subtree at this position.
            embed(node.left, pos, depth, rows)
            return
        if left_rows.size == 0:
            embed(node.right, pos, depth, rows)
            return
        t = pos - 1
        x[meta.dvar[t]] = 1.0
        x[meta.a[j, t]] = 1.0
        x[meta.b[t]] = float(X[right_rows, j].min())
        embed(node.left, 2 * pos, depth + 1, left_rows)
        embed(node.right, 2 * pos + 1, depth + 1, right_rows)

    embed(tree.root, 1, 0, np.arange(meta.n))
    return x


def read_solution_file(path) -> dict[str, float]:
    """Parse ``name value`` pairs, one per line; '#' starts a comment."""
    values: dict[str, float] = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, _, raw = line.partition(" ")
            values[name] = float(raw)
    return values


def write_solution_file(model: MilpModel, x: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        for var, v in zip(model.variables, np.asarray(x, dtype=float)):
            fh.write(f"{var.name} {float(v)!r}\n")


def decode_solution(
    model: MilpModel, values: Mapping[str, float] | np.ndarray, tol: float = 1e-6
) -> Tree:
    """Rebuild the tree a feasible model assignment encodes.

    Inactive branch nodes pool their rows into a single leaf; thresholds are
    placed midway between the largest left-routed and smallest right-routed
    feature value. Leaf means are recomputed from the row assignment and
    decisions re-derived from the oracle.
    """
    meta = model.meta
    if isinstance(values, Mapping):
        index = model.variable_index()
        x = np.zeros(model.n_variables)
        for name, value in values.items():
            if name not in index:
                raise ValueError(f"unknown variable {name!r} in solution")
            x[index[name]] = float(value)
    else:
        x = np.asarray(values, dtype=float)
    violations = check_assignment(model, x, tol)
    if violations:
        raise InfeasibleProblem(
            "assignment violates the model: " + "; ".join(violations[:5])
        )

    r = x[meta.r] > 0.5
    active = x[meta.dvar] > 0.5
    data = meta.dataset

    def leaf_rows(pos: int, depth: int) -> np.ndarray:
        lo = pos * (2 ** (meta.depth - depth)) - (meta.n_leaves - 1) - 1
        hi = lo + 2 ** (meta.depth - depth)
        return np.flatnonzero(r[:, lo:hi].any(axis=1))

    def make_leaf(rows: np.ndarray, depth: int) -> Node:
        weights = data.weights[rows]
        total = float(weights.sum())
        mean = weights @ data.C[rows] / total
        decision = meta.oracle.solve_min(mean)
        loss = float(weights @ (data.C[rows] @ decision.w - meta.zstar[rows]))
        return Node(mean, decision, total, max(loss, 0.0), depth)

    def build(pos: int, pos_depth: int, out_depth: int) -> Node:
        rows = leaf_rows(pos, pos_depth)
        if pos_depth == meta.depth or not active[pos - 1]:
            return make_leaf(rows, out_depth)
        left = leaf_rows(2 * pos, pos_depth + 1)
        right = leaf_rows(2 * pos + 1, pos_depth + 1)
        if left.size == 0 or right.size == 0:
            # The split does not separate any training rows; routing is
            # equivalent to a single leaf.
            return make_leaf(rows, out_depth)
        j = int(np.argmax(x[meta.a[:, pos - 1]]))
        threshold = (meta.X_model[left, j].max() + meta.X_model[right, j].min()) / 2.0
        node = make_leaf(rows, out_depth)
        node.rule = SplitRule(j, float(threshold), "numeric")
        node.left = build(2 * pos, pos_depth + 1, out_depth + 1)
        node.right = build(2 * pos + 1, pos_depth + 1, out_depth + 1)
        return node

    root = build(1, 0, 0)
    return Tree(
        root=root,
        feature_dim=meta.p,
        decision_dim=meta.d,
        loss="spo",
        categorical=data.categorical,
    )


# ---------------------------------------------------------------------------
# Exhaustive exact search over the quantile candidate scheme.


def _candidate_rules(trainer: _GreedyTrainer, idx: np.ndarray) -> list[SplitRule]:
    """Admissible candidate splits of a row set, in (feature, value) order."""
    rules: list[SplitRule] = []
    cfg = trainer.config
    nmin = cfg.min_leaf_weight - 1e-12
    for j in range(trainer.data.feature_dim):
        values = trainer.X[idx, j]
        if trainer.categorical[j]:
            cats = np.unique(values)
            if cats.size < 2:
                continue
            for cat in cats:
                mask = values == cat
                if trainer.w[idx][mask].sum() >= nmin and trainer.w[idx][~mask].sum() >= nmin:
                    rules.append(SplitRule(j, float(cat), "categorical"))
            continue
        order = np.argsort(values, kind="stable")
        vs = values[order]
        cuts = np.flatnonzero(vs[1:] != vs[:-1])
        if cuts.size == 0:
            continue
        if cuts.size > cfg.n_quantiles:
            sel = np.unique(
                np.round(np.linspace(0, cuts.size - 1, cfg.n_quantiles)).astype(np.int64)
            )
            cuts = cuts[sel]
        w_pref = np.cumsum(trainer.w[idx][order])
        for cut in cuts:
            if w_pref[cut] >= nmin and w_pref[-1] - w_pref[cut] >= nmin:
                rules.append(SplitRule(j, float((vs[cut] + vs[cut + 1]) / 2.0), "numeric"))
    return rules


def exhaustive_exact(train: Dataset, config: ExactConfig, oracle: DecisionOracle) -> Tree:
    """Globally optimal depth-limited tree over the candidate-split scheme.

    Minimizes total training SPO loss with mean-cost leaf predictions,
    allowing branch deactivation (a node may stay a leaf at any depth),
    subject to the minimum leaf weight. Guarded against instances whose
    enumeration space is too large.
    """
    greedy_cfg = GreedyConfig(
        loss="spo",
        max_depth=config.depth,
        min_leaf_weight=config.min_leaf_weight,
        n_quantiles=config.n_quantiles,
        validation_fraction=0.0,
        improvement_tol=config.improvement_tol,
    )
    trainer = _GreedyTrainer(train, greedy_cfg, oracle)
    all_rows = np.arange(train.n)
    n_candidates = len(_candidate_rules(trainer, all_rows))
    space = float(max(n_candidates, 1)) ** (2**config.depth - 1)
    if space > config.enumeration_guard:
        raise EnumerationTooLarge(
            f"{n_candidates} candidate splits at depth {config.depth} "
            f"spans {space:.3g} trees (guard {config.enumeration_guard:.3g})"
        )

    def search(idx: np.ndarray, depth: int, remaining: int) -> tuple[float, Node]:
        mean, decision, weight, loss = trainer.node_stats(idx)
        leaf = Node(mean, decision, weight, loss, depth)
        if remaining == 0 or weight < 2 * config.min_leaf_weight:
            return loss, leaf
        if remaining == 1:
            found = trainer.best_split(idx, loss)
            if found is None:
                return loss, leaf
            rule, total = found
            node = leaf
            mask = rule.left_mask(trainer.X[idx])
            node.rule = rule
            _, node.left = search(idx[mask], depth + 1, 0)
            _, node.right = search(idx[~mask], depth + 1, 0)
            return total, node
        best_total, best_node = loss, leaf
        for rule in _candidate_rules(trainer, idx):
            mask = rule.left_mask(trainer.X[idx])
            left_total, left_node = search(idx[mask], depth + 1, remaining - 1)
            right_total, right_node = search(idx[~mask], depth + 1, remaining - 1)
            total = left_total + right_total
            if best_total - total > config.improvement_tol:
                node = Node(mean, decision, weight, loss, depth, rule=rule)
                node.left, node.right = left_node, right_node
                best_total, best_node = total, node
        return best_total, best_node

    _, root = search(all_rows, 0, config.depth)
    return Tree(
        root=root,
        feature_dim=train.feature_dim,
        decision_dim=train.decision_dim,
        loss="spo",
        categorical=train.categorical,
    )


# ---------------------------------------------------------------------------
# MPS export / import. Sections follow the fixed layout (NAME, ROWS, COLUMNS
# with integrality markers, RHS, BOUNDS, ENDATA); fields are whitespace
# separated and numbers use shortest round-trip formatting, which mainstream
# solvers accept and which re-parses to identical coefficients.


def write_mps(model: MilpModel, path) -> None:
    lines = ["NAME          SPOTREES", "ROWS", " N  OBJ"]
    sense_tag = {"<=": " L ", ">=": " G ", "=": " E "}
    for con in model.constraints:
        lines.append(f"{sense_tag[con.sense]} {con.name}")
    lines.append("COLUMNS")
    entries: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for con in model.constraints:
        for pos, coef in zip(con.idx, con.coef):
            if coef != 0.0:
                entries[pos].append((con.name, float(coef)))
    in_integer = False
    marker_count = 0
    for i, var in enumerate(model.variables):
        want_integer = var.kind == "binary"
        if want_integer != in_integer:
            tag = "INTORG" if want_integer else "INTEND"
            lines.append(f"    MARKER{marker_count:<8}'MARKER'                 '{tag}'")
            marker_count += 1
            in_integer = want_integer
        rows = []
        if model.objective[i] != 0.0:
            rows.append(("OBJ", float(model.objective[i])))
        rows.extend(entries[i])
        if not rows:
            rows.append(("OBJ", 0.0))
        for row_name, coef in rows:
            lines.append(f"    {var.name}  {row_name}  {coef!r}")
    if in_integer:
        lines.append(f"    MARKER{marker_count:<8}'MARKER'                 'INTEND'")
    lines.append("RHS")
    if model.objective_constant != 0.0:
        # Convention: the objective row's RHS holds the negated constant.
        lines.append(f"    RHS  OBJ  {-model.objective_constant!r}")
    for con in model.constraints:
        if con.rhs != 0.0:
            lines.append(f"    RHS  {con.name}  {con.rhs!r}")
    lines.append("BOUNDS")
    for var in model.variables:
        if var.kind == "binary":
            lines.append(f" UP BND  {var.name}  1.0")
        else:
            if var.lb != 0.0:
                lines.append(f" LO BND  {var.name}  {var.lb!r}")
            if var.ub != math.inf:
                lines.append(f" UP BND  {var.name}  {var.ub!r}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n")


def export_model(model: MilpModel, path) -> None:
    write_mps(model, path)


@dataclass
class ParsedMps:
    name: str
    row_sense: dict[str, str]
    columns: dict[str, dict[str, float]]  # var -> row -> coefficient
    rhs: dict[str, float]
    bounds: dict[str, tuple[float, float]]
    integer: set[str]
    objective_row: str = "OBJ"


def read_mps(path) -> ParsedMps:
    """Minimal MPS reader covering the subset ``write_mps`` emits."""
    name = ""
    row_sense: dict[str, str] = {}
    columns: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, tuple[float, float]] = {}
    integer: set[str] = set()
    obj_row = None
    section = None
    in_integer = False
    sense_map = {"L": "<=", "G": ">=", "E": "="}
    for raw in Path(path).read_text().splitlines():
        if not raw.strip():
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME" and len(head) > 1:
                name = head[1]
            if section == "ENDATA":
                break
            continue
        tokens = raw.split()
        if section == "ROWS":
            kind, row = tokens
            if kind.upper() == "N":
                obj_row = row
            else:
                row_sense[row] = sense_map[kind.upper()]
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                in_integer = tokens[-1].strip("'").upper() == "INTORG"
                continue
            var = tokens[0]
            col = columns.setdefault(var, {})
            for row, coef in zip(tokens[1::2], tokens[2::2]):
                col[row] = float(coef)
            if in_integer:
                integer.add(var)
        elif section == "RHS":
            for row, value in zip(tokens[1::2], tokens[2::2]):
                rhs[row] = float(value)
        elif section == "BOUNDS":
            kind, _, var = tokens[0].upper(), tokens[1], tokens[2]
            value = float(tokens[3]) if len(tokens) > 3 else 0.0
            lo, hi = bounds.get(var, (0.0, math.inf))
            if kind == "UP":
                hi = value
            elif kind == "LO":
                lo = value
            elif kind == "FX":
                lo = hi = value
            elif kind == "FR":
                lo = -math.inf
            bounds[var] = (lo, hi)
    return ParsedMps(name, row_sense, columns, rhs, bounds, integer, obj_row or "OBJ")
