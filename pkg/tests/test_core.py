import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spotrees.core import (
    Dataset,
    DegenerateData,
    DimensionMismatch,
    leaf_mean,
    load_tree,
    mse_loss,
    normalized_spo_loss,
    save_tree,
    spo_loss,
    tree_from_dict,
    tree_to_dict,
)
from spotrees.datagen import TwoEdgeConfig, gen_two_edge
from spotrees.greedy import GreedyConfig, train_greedy
from spotrees.oracles import GridShortestPathOracle, PolytopeLpOracle

two_edge = PolytopeLpOracle(2)


class TestMseLoss:
    def test_zero_at_truth(self):
        assert mse_loss([1.0, 1.0], [1.0, 1.0]) == 0.0

    def test_pythagorean(self):
        assert mse_loss([0.0, 0.0], [3.0, 4.0]) == 25.0

    def test_mixed(self):
        assert mse_loss([1.0, 2.0], [2.0, 4.0]) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mse_loss([1.0], [1.0, 2.0])


class TestSpoLoss:
    def test_zero_when_predicting_truth(self):
        assert spo_loss(np.array([3.0, 5.0]), np.array([3.0, 5.0]), two_edge) == 0.0

    def test_wrong_edge_costs_excess(self):
        # prediction picks edge 1, truth prefers edge 2: pay 10 instead of 4
        assert spo_loss(np.array([1.0, 2.0]), np.array([10.0, 4.0]), two_edge) == 6.0

    def test_right_edge_despite_wrong_values(self):
        assert spo_loss(np.array([2.0, 1.0]), np.array([10.0, 4.0]), two_edge) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            spo_loss(np.array([1.0]), np.array([1.0, 2.0]), two_edge)

    @given(
        st.lists(st.floats(-50, 50), min_size=2, max_size=2),
        st.lists(st.floats(-50, 50), min_size=2, max_size=2),
    )
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, c_hat, c):
        assert spo_loss(np.array(c_hat), np.array(c), two_edge) >= 0.0


class TestLeafMean:
    def test_arithmetic_mean(self):
        got = leaf_mean(np.array([[2.0, 4.0], [4.0, 6.0]]))
        assert np.array_equal(got, [3.0, 5.0])

    def test_weighted(self):
        got = leaf_mean(np.array([[2.0, 4.0], [6.0, 8.0]]), np.array([3.0, 1.0]))
        assert np.allclose(got, [3.0, 5.0])

    def test_single_row(self):
        assert np.array_equal(
            leaf_mean(np.array([[7.0, 1.0]]), np.array([5.0])), [7.0, 1.0]
        )

    def test_empty_raises(self):
        with pytest.raises(DegenerateData):
            leaf_mean(np.zeros((0, 2)))

    @given(st.floats(0.1, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_invariant_under_weight_scaling(self, scale):
        rng = np.random.default_rng(0)
        C = rng.normal(size=(7, 3))
        w = rng.uniform(0.5, 2.0, size=7)
        assert np.allclose(leaf_mean(C, w), leaf_mean(C, w * scale))


class _FixedPredictor:
    """Stub model returning a fixed prediction per row (tests only)."""

    def __init__(self, C_hat, oracle):
        self.C_hat = np.asarray(C_hat, dtype=float)
        self.oracle = oracle

    def predict_batch(self, X, oracle=None):
        W, _ = self.oracle.solve_min_batch(self.C_hat)
        return self.C_hat, W


class TestNormalizedSpoLoss:
    def test_perfect_predictor_is_zero(self):
        C = np.array([[10.0, 4.0], [5.0, 4.0], [1.0, 9.0]])
        ds = Dataset(X=np.zeros((3, 1)), C=C)
        model = _FixedPredictor(C, two_edge)
        assert normalized_spo_loss(model, ds, two_edge) == 0.0

    def test_hand_computed_ratio(self):
        # row losses (6, 0) against optimal costs (4, 4): 6/8
        C = np.array([[10.0, 4.0], [5.0, 4.0]])
        ds = Dataset(X=np.zeros((2, 1)), C=C)
        model = _FixedPredictor(np.array([[1.0, 2.0], [2.0, 1.0]]), two_edge)
        assert normalized_spo_loss(model, ds, two_edge) == pytest.approx(0.75)

    def test_zero_denominator_raises(self):
        # per-row optimal values are +1 and -1, cancelling to zero
        C = np.array([[1.0, 2.0], [-1.0, 2.0]])
        ds = Dataset(X=np.zeros((2, 1)), C=C)
        model = _FixedPredictor(C, two_edge)
        with pytest.raises(DegenerateData):
            normalized_spo_loss(model, ds, two_edge)


class TestLeafMeanOptimality:
    """The weighted leaf mean minimizes within-leaf SPO loss (small version;
    the acceptance suite runs the full 200x1000 sweep)."""

    @pytest.mark.parametrize("oracle", [two_edge, GridShortestPathOracle(3, 3)])
    def test_leaf_mean_beats_random_candidates(self, oracle):
        rng = np.random.default_rng(7)
        d = oracle.decision_dim
        for _ in range(10):
            C = rng.uniform(0.5, 3.0, size=(12, d))
            w = rng.uniform(0.5, 2.0, size=12)
            z = oracle.optimal_value_batch(C)
            S = w @ C
            mean = S / w.sum()
            base = S @ oracle.solve_min(mean).w - w @ z
            cands = rng.uniform(0.0, 4.0, size=(200, d))
            W_cand, _ = oracle.solve_min_batch(cands)
            losses = W_cand @ S - w @ z
            assert base <= losses.min() + 1e-9


@pytest.fixture(scope="module")
def boundary_tree():
    data = gen_two_edge(TwoEdgeConfig(n=4000, seed=5)).with_cost_perturbation(seed=5)
    return train_greedy(
        data, GreedyConfig(loss="spo", max_depth=1, min_leaf_weight=20), two_edge
    )


class TestPredictAndSerialization:
    def test_single_leaf_prediction(self):
        ds = Dataset(X=np.zeros((2, 1)), C=np.array([[2.0, 4.0], [4.0, 6.0]]))
        tree = train_greedy(
            ds, GreedyConfig(loss="spo", max_depth=0, min_leaf_weight=1), two_edge
        )
        mean, decision = tree.predict(np.array([123.0]))
        assert np.allclose(mean, [3.0, 5.0])
        assert decision.w[0] == 1.0  # edge 1 is cheaper for the mean (3, 5)

    def test_boundary_split_routes_decisions(self, boundary_tree):
        _, left = boundary_tree.predict(np.array([0.1]))
        _, right = boundary_tree.predict(np.array([0.9]))
        assert left.w[1] == 1.0  # below the boundary edge 2 is optimal
        assert right.w[0] == 1.0

    def test_routing_is_deterministic(self, boundary_tree):
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(50, 1))
        a = boundary_tree.apply(X)
        b = boundary_tree.apply(X)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self, boundary_tree):
        with pytest.raises(DimensionMismatch):
            boundary_tree.predict(np.array([0.1, 0.2]))

    def test_json_round_trip_is_lossless(self, boundary_tree, tmp_path):
        path = tmp_path / "tree.json"
        save_tree(boundary_tree, path)
        loaded = load_tree(path)
        assert tree_to_dict(loaded) == tree_to_dict(boundary_tree)
        # exact float equality, not approximate
        assert loaded.root.rule.value == boundary_tree.root.rule.value
        assert np.array_equal(loaded.root.left.mean_cost, boundary_tree.root.left.mean_cost)

    def test_round_trip_through_plain_json(self, boundary_tree):
        blob = json.dumps(tree_to_dict(boundary_tree))
        again = tree_from_dict(json.loads(blob))
        assert tree_to_dict(again) == tree_to_dict(boundary_tree)


class TestDatasetValidation:
    def test_weight_length_checked(self):
        with pytest.raises(DimensionMismatch):
            Dataset(X=np.zeros((2, 1)), C=np.zeros((2, 2)), weights=np.ones(3))

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            Dataset(X=np.zeros((2, 1)), C=np.zeros((2, 2)), weights=np.array([1.0, -1.0]))

    def test_all_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            Dataset(X=np.zeros((2, 1)), C=np.zeros((2, 2)), weights=np.zeros(2))

    def test_nonfinite_costs_rejected(self):
        with pytest.raises(ValueError):
            Dataset(X=np.zeros((1, 1)), C=np.array([[np.inf, 1.0]]))

    def test_perturbation_is_small_and_seeded(self):
        ds = Dataset(X=np.zeros((3, 1)), C=np.array([[2.0, 4.0], [4.0, 6.0], [1.0, 1.0]]))
        a = ds.with_cost_perturbation(scale=1e-6, seed=1)
        b = ds.with_cost_perturbation(scale=1e-6, seed=1)
        assert np.array_equal(a.C, b.C)
        assert np.max(np.abs(a.C - ds.C)) <= 1e-6 * np.maximum(np.abs(ds.C), 1.0).max()
        assert np.any(a.C != ds.C)
