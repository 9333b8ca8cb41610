import numpy as np
import pytest

from spotrees.core import leaf_mean, tree_to_dict
from spotrees.datagen import GridSPConfig, gen_grid_sp
from spotrees.forest import (
    Forest,
    ForestConfig,
    load_forest,
    save_forest,
    train_forest,
    tune_feature_bag_size,
)
from spotrees.greedy import GreedyConfig, train_greedy
from spotrees.oracles import GridShortestPathOracle

oracle = GridShortestPathOracle(4, 4)


@pytest.fixture(scope="module")
def grid_data():
    train, test, _ = gen_grid_sp(GridSPConfig(n=150, deg=10, noise_half_width=0.25, seed=8))
    return train.with_cost_perturbation(seed=8), test


def test_degenerate_forest_equals_single_tree(grid_data):
    train, test = grid_data
    config = ForestConfig(
        n_trees=1,
        feature_bag_size=None,
        bootstrap=False,
        seed=0,
        base=GreedyConfig(loss="spo", min_leaf_weight=15),
    )
    forest = train_forest(train, config, oracle)
    tree = train_greedy(train, config.base_config(), oracle)
    fc = forest.predict_cost_batch(test.X)
    tc, _ = tree.predict_batch(test.X)
    assert np.array_equal(fc, tc)


def test_fixed_seed_reproduces_forest(grid_data):
    train, _ = grid_data
    config = ForestConfig(
        n_trees=4, feature_bag_size=3, seed=5, base=GreedyConfig(loss="spo", min_leaf_weight=15)
    )
    a = train_forest(train, config, oracle)
    b = train_forest(train, config, oracle)
    assert [tree_to_dict(t) for t in a.trees] == [tree_to_dict(t) for t in b.trees]


def test_prediction_invariant_under_tree_order(grid_data):
    train, test = grid_data
    config = ForestConfig(
        n_trees=5, feature_bag_size=2, seed=1, base=GreedyConfig(loss="spo", min_leaf_weight=15)
    )
    forest = train_forest(train, config, oracle)
    reversed_forest = Forest(
        trees=list(reversed(forest.trees)), config=forest.config, tree_seeds=forest.tree_seeds
    )
    assert np.allclose(
        forest.predict_cost_batch(test.X), reversed_forest.predict_cost_batch(test.X)
    )


def test_forest_mean_is_leaf_mean_of_tree_predictions(grid_data):
    train, test = grid_data
    config = ForestConfig(
        n_trees=3, feature_bag_size=2, seed=2, base=GreedyConfig(loss="spo", min_leaf_weight=15)
    )
    forest = train_forest(train, config, oracle)
    x = test.X[0]
    per_tree = np.stack([t.predict(x)[0] for t in forest.trees])
    assert np.allclose(forest.predict_cost(x), leaf_mean(per_tree))


def test_forest_prediction_uses_single_oracle_call(grid_data):
    train, test = grid_data
    config = ForestConfig(
        n_trees=3, seed=3, base=GreedyConfig(loss="spo", min_leaf_weight=15)
    )
    forest = train_forest(train, config, oracle)
    calls = []
    original = oracle.solve_min

    class Spy:
        def __getattr__(self, name):
            return getattr(oracle, name)

        def solve_min(self, c):
            calls.append(np.array(c))
            return original(c)

    mean, decision = forest.predict(test.X[0], Spy())
    assert len(calls) == 1
    assert np.array_equal(calls[0], mean)
    assert float(mean @ decision.w) == decision.objective_value


def test_weighted_bootstrap_resamples_proportionally():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(40, 2))
    C = rng.uniform(1.0, 2.0, size=(40, 24))
    heavy = np.ones(40)
    heavy[0] = 500.0  # row 0 dominates the sampling distribution
    from spotrees.core import Dataset

    ds = Dataset(X=X, C=C, weights=heavy)
    config = ForestConfig(n_trees=1, seed=0, base=GreedyConfig(loss="spo", min_leaf_weight=5))
    forest = train_forest(ds, config, oracle)
    root = forest.trees[0].root
    assert root.training_weight == 40  # unit weights per draw
    assert np.allclose(root.mean_cost, C[0], atol=0.25)  # row 0 dominates the sample


def test_zip_round_trip(grid_data, tmp_path):
    train, test = grid_data
    config = ForestConfig(
        n_trees=3, feature_bag_size=2, seed=4, base=GreedyConfig(loss="spo", min_leaf_weight=15)
    )
    forest = train_forest(train, config, oracle)
    path = tmp_path / "forest.zip"
    save_forest(forest, path)
    loaded = load_forest(path)
    assert [tree_to_dict(t) for t in loaded.trees] == [tree_to_dict(t) for t in forest.trees]
    assert np.array_equal(
        loaded.predict_cost_batch(test.X), forest.predict_cost_batch(test.X)
    )
    save_forest(forest, tmp_path / "again.zip")
    assert (tmp_path / "again.zip").read_bytes() == path.read_bytes()


def test_bag_size_tuning_prefers_lower_validation_loss(grid_data):
    train, test = grid_data
    config = ForestConfig(n_trees=5, seed=6, base=GreedyConfig(loss="spo", min_leaf_weight=15))
    forest, bag = tune_feature_bag_size(train, test, config, oracle, grid=(2, 5))
    assert bag in (2, 5)
    assert forest.config.feature_bag_size == bag
