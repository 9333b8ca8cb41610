"""Greedy recursive-partitioning trainer for SPO and MSE loss, plus pruning.

Split search exploits the closed form of the within-leaf optimum: the best
prediction for a leaf is its weighted mean cost, so a candidate split is
scored with two oracle calls (one per child) and prefix-sum arithmetic. All
candidate children for one feature are solved in a single oracle batch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    Dataset,
    DegenerateData,
    Node,
    SplitRule,
    Tree,
)
from .oracles import DecisionOracle

LOSSES = ("spo", "mse")


@dataclass(frozen=True)
class GreedyConfig:
    """Stopping criteria and candidate-split policy for greedy training.

    ``min_leaf_weight`` is measured in total sample weight, not row count.
    ``n_quantiles`` caps the number of candidate thresholds per continuous
    feature (taken at evenly spaced quantiles of the unique observed values,
    with thresholds placed at midpoints between consecutive unique values).
    """

    loss: str = "spo"
    max_depth: int | None = None
    min_leaf_weight: float = 20.0
    n_quantiles: int = 100
    validation_fraction: float = 0.2
    seed: int = 0
    feature_bag_size: int | None = None
    improvement_tol: float = 1e-9

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_leaf_weight < 1:
            raise ValueError("min_leaf_weight must be >= 1")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must be in [0, 1)")


class _GreedyTrainer:
    def __init__(
        self,
        dataset: Dataset,
        config: GreedyConfig,
        oracle: DecisionOracle,
        rng: np.random.Generator | None = None,
    ):
        if dataset.n == 0:
            raise DegenerateData("cannot train on an empty dataset")
        if dataset.decision_dim != oracle.decision_dim:
            raise DegenerateData(
                f"dataset decision dim {dataset.decision_dim} != oracle {oracle.decision_dim}"
            )
        self.data = dataset
        self.config = config
        self.oracle = oracle
        self.rng = rng
        self.X = dataset.X
        self.w = dataset.weights
        self.wc = dataset.weights[:, None] * dataset.C
        if config.loss == "spo":
            self.wz = dataset.weights * oracle.optimal_value_batch(dataset.C)
        else:
            self.wz = None
            self.wsq = dataset.weights * np.einsum("ij,ij->i", dataset.C, dataset.C)
        if dataset.categorical is None:
            self.categorical = np.zeros(dataset.feature_dim, dtype=bool)
        else:
            self.categorical = dataset.categorical

    # -- per-node statistics -------------------------------------------------

    def node_stats(self, idx: np.ndarray):
        weight = float(self.w[idx].sum())
        if weight <= 0:
            raise DegenerateData("node has zero total weight")
        cost_sum = self.wc[idx].sum(axis=0)
        mean = cost_sum / weight
        decision = self.oracle.solve_min(mean)
        if self.config.loss == "spo":
            loss = float(cost_sum @ decision.w - self.wz[idx].sum())
        else:
            loss = float(self.wsq[idx].sum() - cost_sum @ cost_sum / weight)
        return mean, decision, weight, max(loss, 0.0)

    # -- split search ----------------------------------------------------------

    def _candidate_features(self) -> np.ndarray:
        p = self.data.feature_dim
        bag = self.config.feature_bag_size
        if bag is None or bag >= p:
            return np.arange(p)
        if self.rng is None:
            raise ValueError("feature bagging requires a random generator")
        return np.sort(self.rng.choice(p, size=bag, replace=False))

    def _score_children(self, sums_l, sums_r, extra_l, extra_r, w_l, w_r):
        """Total child loss per candidate from per-side weighted sums.

        ``extra`` is the prefix of weighted optimal values (SPO) or weighted
        squared norms (MSE) for the corresponding side.
        """
        if self.config.loss == "spo":
            means = np.concatenate([sums_l / w_l[:, None], sums_r / w_r[:, None]])
            w_star, _ = self.oracle.solve_min_batch(means)
            k = sums_l.shape[0]
            loss_l = np.einsum("ij,ij->i", sums_l, w_star[:k]) - extra_l
            loss_r = np.einsum("ij,ij->i", sums_r, w_star[k:]) - extra_r
        else:
            loss_l = extra_l - np.einsum("ij,ij->i", sums_l, sums_l) / w_l
            loss_r = extra_r - np.einsum("ij,ij->i", sums_r, sums_r) / w_r
        return loss_l + loss_r

    def _scan_numeric(self, idx: np.ndarray, j: int):
        values = self.X[idx, j]
        order = np.argsort(values, kind="stable")
        vs = values[order]
        cuts = np.flatnonzero(vs[1:] != vs[:-1])
        if cuts.size == 0:
            return None
        if cuts.size > self.config.n_quantiles:
            sel = np.unique(
                np.round(
                    np.linspace(0, cuts.size - 1, self.config.n_quantiles)
                ).astype(np.int64)
            )
            cuts = cuts[sel]

        w_sorted = self.w[idx][order]
        w_pref = np.cumsum(w_sorted)
        total_w = w_pref[-1]
        w_l = w_pref[cuts]
        w_r = total_w - w_l
        nmin = self.config.min_leaf_weight - 1e-12
        feasible = (w_l >= nmin) & (w_r >= nmin)
        if not feasible.any():
            return None
        cuts = cuts[feasible]
        w_l, w_r = w_l[feasible], w_r[feasible]

        cost_pref = np.cumsum(self.wc[idx][order], axis=0)
        sums_l = cost_pref[cuts]
        sums_r = cost_pref[-1] - sums_l
        if self.config.loss == "spo":
            z_pref = np.cumsum(self.wz[idx][order])
            extra_l = z_pref[cuts]
            extra_r = z_pref[-1] - extra_l
        else:
            q_pref = np.cumsum(self.wsq[idx][order])
            extra_l = q_pref[cuts]
            extra_r = q_pref[-1] - extra_l
        total = self._score_children(sums_l, sums_r, extra_l, extra_r, w_l, w_r)
        best = int(np.argmin(total))
        threshold = (vs[cuts[best]] + vs[cuts[best] + 1]) / 2.0
        return SplitRule(j, float(threshold), "numeric"), float(total[best])

    def _scan_categorical(self, idx: np.ndarray, j: int):
        values = self.X[idx, j]
        cats, inverse = np.unique(values, return_inverse=True)
        if cats.size < 2:
            return None
        w_g = np.zeros(cats.size)
        np.add.at(w_g, inverse, self.w[idx])
        total_w = w_g.sum()
        w_r = total_w - w_g
        nmin = self.config.min_leaf_weight - 1e-12
        feasible = (w_g >= nmin) & (w_r >= nmin)
        if not feasible.any():
            return None
        sums_g = np.zeros((cats.size, self.data.decision_dim))
        np.add.at(sums_g, inverse, self.wc[idx])
        total_sum = sums_g.sum(axis=0)
        if self.config.loss == "spo":
            extra_g = np.zeros(cats.size)
            np.add.at(extra_g, inverse, self.wz[idx])
        else:
            extra_g = np.zeros(cats.size)
            np.add.at(extra_g, inverse, self.wsq[idx])
        extra_total = extra_g.sum()

        cats = cats[feasible]
        w_l, w_r = w_g[feasible], w_r[feasible]
        sums_l = sums_g[feasible]
        total = self._score_children(
            sums_l, total_sum - sums_l, extra_g[feasible], extra_total - extra_g[feasible], w_l, w_r
        )
        best = int(np.argmin(total))
        return SplitRule(j, float(cats[best]), "categorical"), float(total[best])

    def best_split(self, idx: np.ndarray, parent_loss: float):
        """Best admissible split of ``idx`` or None when nothing improves.

        Ties in total child loss break toward the lower feature index, then
        the lower threshold (scan order makes that the first minimum found).
        """
        best: tuple[SplitRule, float] | None = None
        for j in self._candidate_features():
            scan = self._scan_categorical if self.categorical[j] else self._scan_numeric
            found = scan(idx, int(j))
            if found is not None and (best is None or found[1] < best[1]):
                best = found
        if best is None or parent_loss - best[1] <= self.config.improvement_tol:
            return None
        return best

    # -- recursion ----------------------------------------------------------

    def grow(self, idx: np.ndarray, depth: int) -> Node:
        mean, decision, weight, loss = self.node_stats(idx)
        node = Node(mean, decision, weight, loss, depth)
        depth_ok = self.config.max_depth is None or depth < self.config.max_depth
        if not depth_ok or weight < 2 * self.config.min_leaf_weight:
            return node
        found = self.best_split(idx, node.train_loss)
        if found is None:
            return node
        rule, _ = found
        mask = rule.left_mask(self.X[idx])
        node.rule = rule
        node.left = self.grow(idx[mask], depth + 1)
        node.right = self.grow(idx[~mask], depth + 1)
        return node

    def fit(self) -> Tree:
        if self.data.total_weight < self.config.min_leaf_weight:
            raise DegenerateData(
                "total training weight is below the minimum leaf weight"
            )
        root = self.grow(np.arange(self.data.n), 0)
        return Tree(
            root=root,
            feature_dim=self.data.feature_dim,
            decision_dim=self.data.decision_dim,
            loss=self.config.loss,
            categorical=self.data.categorical,
        )


def train_greedy(
    dataset: Dataset,
    config: GreedyConfig,
    oracle: DecisionOracle,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a tree by greedy recursive partitioning under the configured loss."""
    return _GreedyTrainer(dataset, config, oracle, rng).fit()


def best_split(
    dataset: Dataset,
    config: GreedyConfig,
    oracle: DecisionOracle,
    rows: np.ndarray | None = None,
):
    """Best single split of a (subset of a) dataset, or None.

    Returns ``(rule, total_child_loss)`` where the loss is the weighted sum of
    the two children's within-leaf losses. None means no admissible split
    strictly improves on the unsplit node.
    """
    trainer = _GreedyTrainer(dataset, config, oracle)
    idx = np.arange(dataset.n) if rows is None else np.asarray(rows)
    if idx.size == 0:
        raise DegenerateData("cannot split an empty row set")
    _, _, _, parent_loss = trainer.node_stats(idx)
    return trainer.best_split(idx, parent_loss)


def split_validation(
    dataset: Dataset, fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic (train, validation) partition of a dataset."""
    if not 0 < fraction < 1:
        raise ValueError("validation fraction must be in (0, 1)")
    n_val = int(round(dataset.n * fraction))
    n_val = min(max(n_val, 1), dataset.n - 1)
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5A11])).permutation(
        dataset.n
    )
    return dataset.subset(perm[n_val:]), dataset.subset(perm[:n_val])


# ---------------------------------------------------------------------------
# Cost-complexity pruning (weakest link on training loss, selection on a
# validation set; collapsed nodes keep their training-set means/decisions).


def _index_nodes(tree: Tree) -> dict[int, int]:
    return {id(node): i for i, node in enumerate(tree.root.iter_nodes())}


def _validation_node_losses(
    tree: Tree, validation: Dataset, loss: str, oracle: DecisionOracle
) -> dict[int, float]:
    """Validation loss each node would incur as a leaf (training prediction)."""
    if validation.n == 0:
        raise DegenerateData("validation set is empty")
    w = validation.weights
    wc = w[:, None] * validation.C
    if loss == "spo":
        wz = w * oracle.optimal_value_batch(validation.C)
    else:
        wq = w * np.einsum("ij,ij->i", validation.C, validation.C)
    out: dict[int, float] = {}

    def visit(node: Node, idx: np.ndarray) -> None:
        if loss == "spo":
            out[id(node)] = float(wc[idx].sum(axis=0) @ node.decision.w - wz[idx].sum())
        else:
            s = wc[idx].sum(axis=0)
            m = node.mean_cost
            out[id(node)] = float(
                wq[idx].sum() - 2.0 * (m @ s) + (m @ m) * w[idx].sum()
            )
        if not node.is_leaf:
            mask = node.rule.left_mask(validation.X[idx])
            visit(node.left, idx[mask])
            visit(node.right, idx[~mask])

    visit(tree.root, np.arange(validation.n))
    return out


def weakest_link_sequence(tree: Tree) -> list[tuple[float, frozenset[int]]]:
    """Nested subtree sequence from repeated weakest-link collapses.

    Each entry is ``(alpha, collapsed_node_ids)``; the first is the full tree
    at alpha 0 and the last collapses the root. Node ids refer to traversal
    order (see ``Tree.root.iter_nodes``).
    """
    ids = _index_nodes(tree)
    collapsed: set[int] = set()
    sequence: list[tuple[float, frozenset[int]]] = [(0.0, frozenset())]

    def subtree_stats(node: Node) -> tuple[float, int]:
        if node.is_leaf or ids[id(node)] in collapsed:
            return node.train_loss, 1
        l_loss, l_cnt = subtree_stats(node.left)
        r_loss, r_cnt = subtree_stats(node.right)
        return l_loss + r_loss, l_cnt + r_cnt

    def internal_nodes(node: Node):
        if node.is_leaf or ids[id(node)] in collapsed:
            return
        yield node
        yield from internal_nodes(node.left)
        yield from internal_nodes(node.right)

    while True:
        candidates = list(internal_nodes(tree.root))
        if not candidates:
            break
        links = []
        for node in candidates:
            sub_loss, sub_leaves = subtree_stats(node)
            links.append((node.train_loss - sub_loss) / (sub_leaves - 1))
        alpha = min(links)
        for node, g in zip(candidates, links):
            if g <= alpha + 1e-12:
                collapsed.add(ids[id(node)])
        sequence.append((max(alpha, 0.0), frozenset(collapsed)))
    return sequence


def prune(tree: Tree, validation: Dataset, loss: str, oracle: DecisionOracle) -> Tree:
    """Select the weakest-link subtree with the lowest validation loss.

    Ties go to the smaller subtree. Leaves keep the training-set means and
    cached decisions of the node they collapse into.
    """
    if loss not in LOSSES:
        raise ValueError(f"loss must be one of {LOSSES}")
    if tree.root.is_leaf:
        return tree
    ids = _index_nodes(tree)
    val_losses = _validation_node_losses(tree, validation, loss, oracle)
    sequence = weakest_link_sequence(tree)

    def subtree_val_loss(collapsed: frozenset[int]) -> float:
        total = 0.0
        stack = [tree.root]
        while stack:
            node = stack.pop()
            if node.is_leaf or ids[id(node)] in collapsed:
                total += val_losses[id(node)]
            else:
                stack.append(node.left)
                stack.append(node.right)
        return total

    best_collapsed = sequence[0][1]
    best_val = subtree_val_loss(best_collapsed)
    for _, collapsed in sequence[1:]:
        val = subtree_val_loss(collapsed)
        if val <= best_val:
            best_val = val
            best_collapsed = collapsed

    def rebuild(node: Node) -> Node:
        if node.is_leaf or ids[id(node)] in best_collapsed:
            return node.as_leaf()
        out = Node(
            mean_cost=node.mean_cost,
            decision=node.decision,
            training_weight=node.training_weight,
            train_loss=node.train_loss,
            depth=node.depth,
            rule=node.rule,
        )
        out.left = rebuild(node.left)
        out.right = rebuild(node.right)
        return out

    return Tree(
        root=rebuild(tree.root),
        feature_dim=tree.feature_dim,
        decision_dim=tree.decision_dim,
        loss=tree.loss,
        categorical=tree.categorical,
    )


def train_greedy_pruned(
    dataset: Dataset, config: GreedyConfig, oracle: DecisionOracle
) -> Tree:
    """Hold out a validation fraction, train on the rest, prune on the holdout."""
    if config.validation_fraction == 0 or dataset.n < 2:
        return train_greedy(dataset, config, oracle)
    train, val = split_validation(dataset, config.validation_fraction, config.seed)
    if train.total_weight < config.min_leaf_weight:
        return train_greedy(dataset, config, oracle)
    tree = train_greedy(train, config, oracle)
    return prune(tree, val, config.loss, oracle)
