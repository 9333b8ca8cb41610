"""Core domain types, loss functions, and evaluation metrics.

Everything downstream (trainers, forests, the MILP encoder, the CLI) works in
terms of the types defined here: weighted feature/cost datasets, split rules,
decision trees whose leaves cache a mean cost vector and the decision it
induces, and the SPO / MSE loss functions used to score predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

import numpy as np

if TYPE_CHECKING:
    from .oracles import DecisionOracle

SPO_CLAMP_TOL = 1e-9
SPO_NEGATIVE_ERROR = 1e-6

SERIALIZATION_VERSION = 1


class SpotreesError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(SpotreesError, ValueError):
    pass


class InfeasibleProblem(SpotreesError, ValueError):
    """A decision problem, constraint set, or variable assignment is infeasible."""


class DegenerateData(SpotreesError, ValueError):
    """Input data violates a precondition (empty subset, zero denominator, ...)."""


@dataclass(frozen=True)
class Decision:
    """A feasible decision vector together with the objective it achieved.

    ``objective_value`` is ``c @ w`` for the cost vector the oracle was solved
    with, so it equals the optimal value when the decision came from a solve.
    """

    w: np.ndarray
    objective_value: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))


@dataclass(frozen=True)
class SplitRule:
    """A single-feature routing rule.

    Numeric rules send ``x[j] <= value`` left and ``x[j] > value`` right;
    categorical rules send ``x[j] == value`` left and everything else right.
    """

    feature_index: int
    value: float
    kind: str = "numeric"  # "numeric" | "categorical"

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValueError(f"unknown split kind {self.kind!r}")
        if self.kind == "numeric" and not np.isfinite(self.value):
            raise ValueError("numeric split threshold must be finite")

    def goes_left(self, x: np.ndarray) -> bool:
        if self.kind == "numeric":
            return bool(x[self.feature_index] <= self.value)
        return bool(x[self.feature_index] == self.value)

    def left_mask(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature_index]
        if self.kind == "numeric":
            return col <= self.value
        return col == self.value

    def describe(self) -> str:
        op = "<=" if self.kind == "numeric" else "=="
        return f"x{self.feature_index} {op} {self.value:g}"


@dataclass
class Dataset:
    """Weighted feature/cost observations.

    X has shape (n, p), C has shape (n, d), weights has shape (n,). The
    optional ``categorical`` mask marks feature columns that are routed by
    equality instead of thresholds.
    """

    X: np.ndarray
    C: np.ndarray
    weights: np.ndarray | None = None
    categorical: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.C = np.ascontiguousarray(self.C, dtype=float)
        if self.X.ndim != 2 or self.C.ndim != 2:
            raise DimensionMismatch("X and C must be 2-dimensional")
        if self.X.shape[0] != self.C.shape[0]:
            raise DimensionMismatch(
                f"X has {self.X.shape[0]} rows but C has {self.C.shape[0]}"
            )
        if self.weights is None:
            self.weights = np.ones(self.X.shape[0])
        self.weights = np.ascontiguousarray(self.weights, dtype=float)
        if self.weights.shape != (self.X.shape[0],):
            raise DimensionMismatch("weights must be one value per row")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if self.n > 0 and not np.any(self.weights > 0):
            raise ValueError("at least one weight must be positive")
        if not np.all(np.isfinite(self.C)):
            raise ValueError("cost vectors must be finite")
        if self.categorical is not None:
            self.categorical = np.asarray(self.categorical, dtype=bool)
            if self.categorical.shape != (self.X.shape[1],):
                raise DimensionMismatch("categorical mask must be one flag per feature")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.X.shape[1]

    @property
    def decision_dim(self) -> int:
        return self.C.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.X[idx], self.C[idx], self.weights[idx], self.categorical)

    def with_cost_perturbation(self, scale: float = 1e-6, seed: int = 0) -> "Dataset":
        """Return a copy with small relative uniform noise added to every cost.

        Breaks exact ties in the decision problem so that oracles have a
        unique optimizer; applied once when a dataset is loaded for training.
        """
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7E2B]))
        mag = np.maximum(np.abs(self.C), 1.0) * scale
        noise = rng.uniform(-1.0, 1.0, size=self.C.shape) * mag
        return Dataset(self.X, self.C + noise, self.weights, self.categorical)


def leaf_mean(costs: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Weighted mean of a set of cost vectors.

    With unit weights this is the arithmetic mean; it is invariant under a
    uniform rescaling of the weights.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] == 0:
        raise DegenerateData("leaf_mean requires a nonempty 2-d cost array")
    if weights is None:
        return costs.mean(axis=0)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise DegenerateData("leaf_mean requires positive total weight")
    return weights @ costs / total


def mse_loss(c_hat: np.ndarray, c: np.ndarray) -> float:
    """Squared Euclidean distance between predicted and true cost vectors."""
    c_hat = np.asarray(c_hat, dtype=float)
    c = np.asarray(c, dtype=float)
    if c_hat.shape != c.shape:
        raise DimensionMismatch(f"shape mismatch {c_hat.shape} vs {c.shape}")
    diff = c_hat - c
    return float(diff @ diff)


def _clamp_spo(value: float) -> float:
    if value < -SPO_NEGATIVE_ERROR:
        raise InfeasibleProblem(
            f"SPO loss {value} is far below zero; the oracle is inconsistent"
        )
    return max(value, 0.0)


def spo_loss(c_hat: np.ndarray, c: np.ndarray, oracle: "DecisionOracle") -> float:
    """Excess true cost of the decision induced by a predicted cost vector.

    Solves the decision problem at ``c_hat``, prices the resulting decision at
    the true cost ``c``, and subtracts the true optimum. Nonnegative for an
    exact oracle; tiny negative values from floating point are clamped to 0.
    """
    c_hat = np.asarray(c_hat, dtype=float)
    c = np.asarray(c, dtype=float)
    if c_hat.shape != (oracle.decision_dim,) or c.shape != (oracle.decision_dim,):
        raise DimensionMismatch(
            f"cost vectors must have dimension {oracle.decision_dim}"
        )
    decision = oracle.solve_min(c_hat)
    return _clamp_spo(float(c @ decision.w) - oracle.optimal_value(c))


@dataclass
class Node:
    """One tree node; internal nodes carry a rule, leaves do not.

    Every node (internal or leaf) stores the weighted mean cost of its
    training rows, the cached optimal decision for that mean, the total
    training weight, and its within-node training loss. Internal nodes keep
    these so that pruning can collapse them into leaves without revisiting
    the training data.
    """

    mean_cost: np.ndarray
    decision: Decision
    training_weight: float
    train_loss: float
    depth: int
    rule: SplitRule | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.rule is None

    def iter_nodes(self) -> Iterator["Node"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def as_leaf(self) -> "Node":
        return Node(
            mean_cost=self.mean_cost,
            decision=self.decision,
            training_weight=self.training_weight,
            train_loss=self.train_loss,
            depth=self.depth,
        )


@dataclass
class Tree:
    """A trained decision tree mapping features to cost predictions/decisions."""

    root: Node
    feature_dim: int
    decision_dim: int
    loss: str = "spo"  # training criterion, "spo" | "mse"
    categorical: np.ndarray | None = None

    @property
    def depth(self) -> int:
        return max(node.depth for node in self.root.iter_nodes() if node.is_leaf)

    @property
    def n_leaves(self) -> int:
        return sum(1 for node in self.root.iter_nodes() if node.is_leaf)

    def leaves(self) -> list[Node]:
        return [node for node in self.root.iter_nodes() if node.is_leaf]

    def find_leaf(self, x: np.ndarray) -> Node:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.feature_dim,):
            raise DimensionMismatch(f"expected {self.feature_dim} features")
        node = self.root
        while not node.is_leaf:
            node = node.left if node.rule.goes_left(x) else node.right
        return node

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, Decision]:
        """Route one feature vector; return the leaf mean cost and decision."""
        leaf = self.find_leaf(x)
        return leaf.mean_cost, leaf.decision

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index (into ``self.leaves()`` order) for each row of X."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.feature_dim:
            raise DimensionMismatch(f"expected (n, {self.feature_dim}) features")
        out = np.empty(X.shape[0], dtype=np.int64)
        counter = [0]

        def route(node: Node, idx: np.ndarray) -> None:
            if node.is_leaf:
                out[idx] = counter[0]
                counter[0] += 1
                return
            mask = node.rule.left_mask(X[idx])
            route(node.left, idx[mask])
            route(node.right, idx[~mask])

        route(self.root, np.arange(X.shape[0]))
        return out

    def predict_batch(
        self, X: np.ndarray, oracle: "DecisionOracle | None" = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Predicted cost vectors and decision vectors for each row of X.

        Decisions come from the per-leaf cache, so no oracle is needed.
        """
        leaves = self.leaves()
        leaf_idx = self.apply(X)
        means = np.stack([leaf.mean_cost for leaf in leaves])
        decisions = np.stack([leaf.decision.w for leaf in leaves])
        return means[leaf_idx], decisions[leaf_idx]


def tree_training_loss(tree: Tree) -> float:
    """Normalized training loss recorded in the tree (sum of leaf losses / weight)."""
    leaves = tree.leaves()
    total_weight = sum(leaf.training_weight for leaf in leaves)
    return sum(leaf.train_loss for leaf in leaves) / total_weight


def spo_losses_batch(
    C_hat_decisions: np.ndarray, C: np.ndarray, z_true: np.ndarray
) -> np.ndarray:
    """Per-row SPO losses given the decision taken for each row.

    ``C_hat_decisions`` holds the decision vector actually taken per row;
    ``z_true`` the per-row true optimal values.
    """
    losses = np.einsum("ij,ij->i", C, C_hat_decisions) - z_true
    low = losses.min(initial=0.0)
    if low < -SPO_NEGATIVE_ERROR:
        raise InfeasibleProblem(
            f"SPO loss {low} is far below zero; the oracle is inconsistent"
        )
    return np.maximum(losses, 0.0)


def normalized_spo_loss(model, test: Dataset, oracle: "DecisionOracle") -> float:
    """Cumulative weighted SPO loss over a dataset divided by cumulative optima.

    Zero exactly when every induced decision is optimal. Raises if the
    denominator vanishes (degenerate test costs).
    """
    z_true = oracle.optimal_value_batch(test.C)
    denom = float(test.weights @ z_true)
    if abs(denom) < 1e-12:
        raise DegenerateData("cumulative optimal cost is zero; cannot normalize")
    _, W = model.predict_batch(test.X, oracle)
    losses = spo_losses_batch(W, test.C, z_true)
    return float(test.weights @ losses) / denom


def evaluate_model(model, test: Dataset, oracle: "DecisionOracle") -> dict:
    """Metrics record for a tree or forest on a test dataset."""
    z_true = oracle.optimal_value_batch(test.C)
    C_hat, W = model.predict_batch(test.X, oracle)
    losses = spo_losses_batch(W, test.C, z_true)
    total_w = test.total_weight
    spo_total = float(test.weights @ losses)
    denom = float(test.weights @ z_true)
    sq = np.einsum("ij,ij->i", C_hat - test.C, C_hat - test.C)
    record = {
        "spo_loss": spo_total / total_w,
        "normalized_spo_loss": spo_total / denom if abs(denom) > 1e-12 else float("nan"),
        "mse": float(test.weights @ sq) / total_w,
    }
    if isinstance(model, Tree):
        record["depth"] = model.depth
        record["n_leaves"] = model.n_leaves
    elif hasattr(model, "trees"):
        record["n_trees"] = len(model.trees)
        record["n_leaves"] = sum(t.n_leaves for t in model.trees)
    return record


# ---------------------------------------------------------------------------
# Tree serialization. JSON round-trips Python floats exactly (shortest repr),
# which covers the 17-significant-digit requirement.


def _node_to_dict(node: Node) -> dict:
    rec = {
        "mean_cost": node.mean_cost.tolist(),
        "decision": {
            "w": node.decision.w.tolist(),
            "objective_value": node.decision.objective_value,
        },
        "training_weight": node.training_weight,
        "train_loss": node.train_loss,
        "depth": node.depth,
    }
    if node.is_leaf:
        rec["kind"] = "leaf"
    else:
        rec["kind"] = "split"
        rec["feature_index"] = node.rule.feature_index
        rec["split_kind"] = node.rule.kind
        rec["threshold"] = node.rule.value
        rec["children"] = [_node_to_dict(node.left), _node_to_dict(node.right)]
    return rec


def _node_from_dict(rec: dict) -> Node:
    decision = Decision(
        w=np.array(rec["decision"]["w"], dtype=float),
        objective_value=float(rec["decision"]["objective_value"]),
    )
    node = Node(
        mean_cost=np.array(rec["mean_cost"], dtype=float),
        decision=decision,
        training_weight=float(rec["training_weight"]),
        train_loss=float(rec["train_loss"]),
        depth=int(rec["depth"]),
    )
    if rec["kind"] == "split":
        node.rule = SplitRule(
            feature_index=int(rec["feature_index"]),
            value=float(rec["threshold"]),
            kind=rec.get("split_kind", "numeric"),
        )
        node.left = _node_from_dict(rec["children"][0])
        node.right = _node_from_dict(rec["children"][1])
    return node


def tree_to_dict(tree: Tree) -> dict:
    return {
        "format": "spotrees-tree",
        "version": SERIALIZATION_VERSION,
        "feature_dim": tree.feature_dim,
        "decision_dim": tree.decision_dim,
        "loss": tree.loss,
        "categorical": None
        if tree.categorical is None
        else [bool(v) for v in tree.categorical],
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(data: dict) -> Tree:
    if data.get("format") != "spotrees-tree":
        raise ValueError("not a spotrees tree record")
    categorical = data.get("categorical")
    return Tree(
        root=_node_from_dict(data["root"]),
        feature_dim=int(data["feature_dim"]),
        decision_dim=int(data["decision_dim"]),
        loss=data.get("loss", "spo"),
        categorical=None if categorical is None else np.array(categorical, dtype=bool),
    )


def save_tree(tree: Tree, path) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_dict(tree), fh, indent=1)
        fh.write("\n")


def load_tree(path) -> Tree:
    with open(path) as fh:
        return tree_from_dict(json.load(fh))
