"""Bootstrap ensembles of greedy trees with per-split feature bagging.

Prediction averages the member trees' cost vectors and then makes a single
oracle call on the average, so ensemble decisions stay feasible by
construction. Per-tree randomness is keyed by (seed, tree index), making the
forest independent of training order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Dataset, DegenerateData, Tree
from .greedy import GreedyConfig, train_greedy
from .oracles import DecisionOracle


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    feature_bag_size: int | None = None  # None: use all features
    loss: str = "spo"
    base: GreedyConfig | None = None  # defaults to an unlimited-depth config
    bootstrap: bool = True  # diagnostic flag; disable to train on the data as-is
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("need at least one tree")
        if self.feature_bag_size is not None and self.feature_bag_size < 1:
            raise ValueError("feature bag size must be >= 1")

    def base_config(self) -> GreedyConfig:
        base = self.base or GreedyConfig(loss=self.loss, max_depth=None)
        return replace(
            base,
            loss=self.loss,
            feature_bag_size=self.feature_bag_size,
            validation_fraction=0.0,
        )


@dataclass
class Forest:
    trees: list[Tree]
    config: ForestConfig
    tree_seeds: list[int] = field(default_factory=list)

    @property
    def feature_dim(self) -> int:
        return self.trees[0].feature_dim

    @property
    def decision_dim(self) -> int:
        return self.trees[0].decision_dim

    def predict_cost(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return self.predict_cost_batch(x)[0]

    def predict_cost_batch(self, X: np.ndarray) -> np.ndarray:
        total = None
        for tree in self.trees:
            costs, _ = tree.predict_batch(X)
            total = costs if total is None else total + costs
        return total / len(self.trees)

    def predict(self, x: np.ndarray, oracle: DecisionOracle):
        """Average the member cost predictions, then solve once."""
        mean = self.predict_cost(x)
        return mean, oracle.solve_min(mean)

    def predict_batch(self, X: np.ndarray, oracle: DecisionOracle):
        means = self.predict_cost_batch(X)
        W, _ = oracle.solve_min_batch(means)
        return means, W


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def train_forest(train: Dataset, config: ForestConfig, oracle: DecisionOracle) -> Forest:
    if train.n == 0:
        raise DegenerateData("cannot train a forest on an empty dataset")
    if config.feature_bag_size is not None and config.feature_bag_size > train.feature_dim:
        raise ValueError("feature bag size exceeds the feature dimension")
    base = config.base_config()
    trees: list[Tree] = []
    seeds: list[int] = []
    prob = train.weights / train.total_weight
    for b in range(config.n_trees):
        rng = _tree_rng(config.seed, b)
        if config.bootstrap:
            idx = rng.choice(train.n, size=train.n, replace=True, p=prob)
            sample = Dataset(
                X=train.X[idx],
                C=train.C[idx],
                weights=np.ones(train.n),
                categorical=train.categorical,
            )
        else:
            sample = train
        trees.append(train_greedy(sample, base, oracle, rng=rng))
        seeds.append(b)
    return Forest(trees=trees, config=config, tree_seeds=seeds)


def save_forest(forest: Forest, path) -> None:
    """Write a forest as a zip container: config manifest plus one tree file
    per member. Fixed timestamps keep repeated saves byte-identical."""
    import json
    import zipfile

    from .core import tree_to_dict

    manifest = {
        "format": "spotrees-forest",
        "version": 1,
        "n_trees": len(forest.trees),
        "loss": forest.config.loss,
        "feature_bag_size": forest.config.feature_bag_size,
        "bootstrap": forest.config.bootstrap,
        "seed": forest.config.seed,
        "tree_seeds": forest.tree_seeds,
    }
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:

        def write(name: str, text: str) -> None:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, text)

        write("manifest.json", json.dumps(manifest, indent=1, sort_keys=True))
        for i, tree in enumerate(forest.trees):
            write(f"tree_{i:04d}.json", json.dumps(tree_to_dict(tree)))


def load_forest(path) -> Forest:
    import json
    import zipfile

    from .core import tree_from_dict

    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format") != "spotrees-forest":
            raise ValueError("not a spotrees forest container")
        trees = [
            tree_from_dict(json.loads(zf.read(f"tree_{i:04d}.json")))
            for i in range(manifest["n_trees"])
        ]
    config = ForestConfig(
        n_trees=manifest["n_trees"],
        feature_bag_size=manifest.get("feature_bag_size"),
        loss=manifest.get("loss", "spo"),
        bootstrap=manifest.get("bootstrap", True),
        seed=manifest.get("seed", 0),
    )
    return Forest(trees=trees, config=config, tree_seeds=manifest.get("tree_seeds", []))


def tune_feature_bag_size(
    train: Dataset,
    validation: Dataset,
    config: ForestConfig,
    oracle: DecisionOracle,
    grid: tuple[int, ...] = (2, 3, 4, 5),
) -> tuple[Forest, int]:
    """Train one forest per bag size; keep the best validation SPO loss.

    Ties go to the smaller bag size. The returned forest is the one trained
    with the winning size (no retraining on the combined data).
    """
    from .core import normalized_spo_loss

    best: tuple[Forest, int] | None = None
    best_loss = np.inf
    for f in grid:
        if f > train.feature_dim:
            continue
        forest = train_forest(train, replace(config, feature_bag_size=f), oracle)
        loss = normalized_spo_loss(forest, validation, oracle)
        if loss < best_loss:
            best, best_loss = (forest, f), loss
    if best is None:
        raise ValueError("no bag size in the grid fits the feature dimension")
    return best
