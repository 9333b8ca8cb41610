import numpy as np
import pytest

from bruteforce import (
    brute_grid_min,
    brute_lp_min,
    enumerate_monotone_paths,
    enumerate_polytope_vertices,
)
from spotrees.core import Dataset, DimensionMismatch, InfeasibleProblem
from spotrees.oracles import (
    GridShortestPathOracle,
    PolytopeLpOracle,
    load_constraints,
    save_constraints,
    value_bounds,
)
from spotrees.simplex import solve_lp


class TestGridOracle:
    def test_edge_count_4x4(self):
        assert GridShortestPathOracle(4, 4).decision_dim == 24

    def test_2x2_symmetric_costs(self):
        g = GridShortestPathOracle(2, 2)
        assert g.decision_dim == 4
        dec = g.solve_min(np.array([1.0, 1.0, 1.0, 1.0]))
        assert dec.objective_value == 2.0
        # tie prefers the east edge (lower edge index)
        assert np.array_equal(dec.w, [1.0, 0.0, 1.0, 0.0])

    def test_2x2_picks_cheaper_path(self):
        g = GridShortestPathOracle(2, 2)
        # east-then-north: edges 0 and 2; north-then-east: edges 1 and 3
        c = np.array([1.0, 2.0, 2.0, 3.0])
        dec = g.solve_min(c)
        assert dec.objective_value == 3.0
        assert np.array_equal(dec.w, [1.0, 0.0, 1.0, 0.0])

    def test_matches_brute_force_enumeration(self):
        g = GridShortestPathOracle(4, 4)
        paths = enumerate_monotone_paths(4, 4)
        assert paths.shape[0] == 20
        rng = np.random.default_rng(11)
        C = rng.uniform(0.1, 5.0, size=(100, 24))
        W, z = g.solve_min_batch(C)
        for i in range(C.shape[0]):
            bw, bz = brute_grid_min(C[i], paths)
            assert abs(z[i] - bz) <= 1e-9
            assert np.array_equal(W[i], bw)

    def test_paths_are_valid_and_feasible(self):
        g = GridShortestPathOracle(4, 4)
        rng = np.random.default_rng(2)
        W, _ = g.solve_min_batch(rng.uniform(0.5, 2.0, size=(50, 24)))
        assert np.all(W.sum(axis=1) == 6)  # (width-1) + (height-1) edges
        for w in W:
            assert g.is_feasible(w)

    def test_nonpath_rejected(self):
        g = GridShortestPathOracle(4, 4)
        w = np.zeros(24)
        w[:6] = 1.0  # six edges that do not form a monotone path
        assert not g.is_feasible(w)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            GridShortestPathOracle(4, 4).solve_min(np.ones(23))

    def test_deterministic(self):
        g = GridShortestPathOracle(4, 4)
        c = np.random.default_rng(4).uniform(size=24)
        a, b = g.solve_min(c), g.solve_min(c)
        assert np.array_equal(a.w, b.w) and a.objective_value == b.objective_value


class TestPolytopeLpOracle:
    def test_simplex_vertex_max(self):
        lp = PolytopeLpOracle(2)
        dec = lp.solve_max(np.array([0.5, 0.2]))
        assert np.array_equal(dec.w, [1.0, 0.0])
        assert dec.objective_value == 0.5

    def test_capped_first_coordinate(self):
        lp = PolytopeLpOracle(2, np.array([[1.0, 0.0]]), np.array([0.6]))
        dec = lp.solve_max(np.array([0.5, 0.2]))
        assert np.allclose(dec.w, [0.6, 0.4], atol=1e-9)
        assert dec.objective_value == pytest.approx(0.38, abs=1e-9)

    def test_constant_objective_on_simplex(self):
        lp = PolytopeLpOracle(3)
        dec = lp.solve_max(np.array([0.1, 0.1, 0.1]))
        assert dec.objective_value == pytest.approx(0.1, abs=1e-12)

    def test_infeasible_uniform_point_rejected(self):
        with pytest.raises(InfeasibleProblem):
            PolytopeLpOracle(2, np.array([[1.0, 1.0]]), np.array([0.4]))

    def test_matches_vertex_enumeration(self):
        rng = np.random.default_rng(23)
        done = 0
        while done < 25:
            d = int(rng.integers(2, 5))
            m = int(rng.integers(0, 4))
            A = rng.exponential(1.0, size=(m, d))
            b = np.ones(m)
            if m and np.any(A @ (np.ones(d) / d) > b):
                continue
            lp = PolytopeLpOracle(d, A, b)
            verts = enumerate_polytope_vertices(A, b, d)
            assert verts.shape[0] > 0
            for _ in range(4):
                c = rng.normal(size=d)
                dec = lp.solve_min(c)
                best = brute_lp_min(c, verts)
                assert np.all(dec.objective_value <= verts @ c + 1e-8)  # no vertex beats it
                assert abs(dec.objective_value - best) <= 1e-8
                assert lp.is_feasible(dec.w)
            done += 1

    def test_solve_min_consistency(self):
        lp = PolytopeLpOracle(4, np.array([[2.0, 0.0, 0.0, 1.0]]), np.array([1.0]))
        c = np.array([0.3, -0.2, 0.1, -0.5])
        dec = lp.solve_min(c)
        assert abs(dec.objective_value - float(c @ dec.w)) <= 1e-9
        assert abs(dec.objective_value - lp.optimal_value(c)) <= 1e-9


class TestValueBounds:
    two_edge = PolytopeLpOracle(2)

    def test_nonnegative_costs_give_zero_m2(self):
        ds = Dataset(X=np.zeros((2, 1)), C=np.array([[3.0, 5.0], [10.0, 4.0]]))
        m1, m2 = value_bounds(ds, self.two_edge)
        assert m1 == 10.0
        assert m2 == 0.0

    def test_zero_costs(self):
        ds = Dataset(X=np.zeros((1, 1)), C=np.zeros((1, 2)))
        assert value_bounds(ds, self.two_edge) == (0.0, 0.0)

    @pytest.mark.parametrize(
        "oracle",
        [PolytopeLpOracle(3, np.array([[1.0, 1.5, 0.2]]), np.array([1.0])), GridShortestPathOracle(3, 3)],
    )
    def test_bounds_hold_for_feasible_decisions(self, oracle):
        rng = np.random.default_rng(5)
        C = rng.normal(0.0, 2.0, size=(20, oracle.decision_dim))
        m1, m2 = value_bounds(C, oracle)
        W, _ = oracle.solve_min_batch(rng.normal(size=(100, oracle.decision_dim)))
        vals = C @ W.T
        assert np.all(vals <= m1 + 1e-9)
        assert np.all(-vals <= m2 + 1e-9)


class TestSimplexSolver:
    def test_matches_scipy_linprog_on_random_instances(self):
        scipy_opt = pytest.importorskip("scipy.optimize")
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 40:
            d = int(rng.integers(2, 9))
            m = int(rng.integers(0, 7))
            A = rng.exponential(1.0, size=(m, d))
            b = np.ones(m)
            if m and np.any(A @ (np.ones(d) / d) > b):
                continue
            c = rng.normal(size=d)
            x, value = solve_lp(c, A, b, np.ones((1, d)), np.ones(1))
            ref = scipy_opt.linprog(
                c, A_ub=A if m else None, b_ub=b if m else None,
                A_eq=np.ones((1, d)), b_eq=np.ones(1), bounds=(0, None),
            )
            assert ref.status == 0
            assert value == pytest.approx(ref.fun, abs=1e-8)
            assert np.all(x >= -1e-9) and abs(x.sum() - 1.0) <= 1e-9
            checked += 1

    def test_degenerate_ties_resolve_deterministically(self):
        A = np.array([[1.0, 1.0, 0.0]])
        b = np.array([1.0])
        c = np.array([1.0, 1.0, 1.0])
        x1, v1 = solve_lp(c, A, b, np.ones((1, 3)), np.ones(1))
        x2, v2 = solve_lp(c, A, b, np.ones((1, 3)), np.ones(1))
        assert np.array_equal(x1, x2) and v1 == v2

    def test_infeasible_detected(self):
        with pytest.raises(InfeasibleProblem):
            solve_lp(
                np.array([1.0, 1.0]),
                np.array([[1.0, 1.0]]),
                np.array([0.5]),
                np.ones((1, 2)),
                np.ones(1),
            )


class TestConstraintFiles:
    def test_round_trip(self, tmp_path):
        A = np.array([[0.25, 1.5, 0.125], [1.0, 0.0, 3.0]])
        b = np.array([1.0, 2.5])
        path = tmp_path / "constraints.txt"
        save_constraints(path, A, b)
        A2, b2 = load_constraints(path)
        assert np.array_equal(A, A2)
        assert np.array_equal(b, b2)
        first = path.read_text().splitlines()[0]
        assert first.strip() == "3"

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ValueError):
            load_constraints(path)
