"""Benchmark the compiled grid-path kernel against the NumPy fallback.

Run:  python benchmarks/bench_kernels.py

Times batched shortest-path solves (the hot kernel of greedy SPO training:
every candidate split costs two oracle solves) and one end-to-end greedy
training run on each backend.
"""

from __future__ import annotations

import time

import numpy as np

from spotrees._kernels import (
    BACKEND,
    solve_grid_batch,
    solve_grid_batch_reference,
)
from spotrees.datagen import GridSPConfig, gen_grid_sp
from spotrees.greedy import GreedyConfig, train_greedy
from spotrees.oracles import GridShortestPathOracle, grid_edge_maps


def time_fn(fn, *args, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_batches() -> None:
    east, north, d = grid_edge_maps(4, 4)
    rng = np.random.default_rng(0)
    print(f"grid 4x4 ({d} edges); compiled backend available: {BACKEND == 'compiled'}")
    print(f"{'batch':>8} {'numpy (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for batch in (1, 10, 100, 1000, 10000):
        costs = rng.uniform(0.5, 2.0, size=(batch, d))
        t_ref = time_fn(solve_grid_batch_reference, costs, 4, 4, east, north)
        if BACKEND == "compiled":
            t_cy = time_fn(solve_grid_batch, costs, 4, 4, east, north)
            ratio = f"{t_ref / t_cy:7.1f}x"
            t_cy_ms = f"{1e3 * t_cy:14.3f}"
        else:
            ratio, t_cy_ms = "    n/a", "           n/a"
        print(f"{batch:>8} {1e3 * t_ref:12.3f} {t_cy_ms} {ratio}")
    va, pa = solve_grid_batch_reference(costs, 4, 4, east, north)
    if BACKEND == "compiled":
        vb, pb = solve_grid_batch(costs, 4, 4, east, north)
        assert np.array_equal(va, vb) and np.array_equal(pa, pb), "backend mismatch"
        print("backends agree bit-for-bit on the last batch")


def bench_training() -> None:
    train, _, _ = gen_grid_sp(GridSPConfig(n=1000, deg=10, noise_half_width=0.25, seed=7))
    train = train.with_cost_perturbation(seed=7)
    oracle = GridShortestPathOracle(4, 4)
    config = GreedyConfig(loss="spo", max_depth=None, min_leaf_weight=20)

    import spotrees._kernels as kernels

    results = {}
    for name, fn in (("numpy", solve_grid_batch_reference), ("compiled", None)):
        if name == "compiled":
            if BACKEND != "compiled":
                continue
            fn = solve_grid_batch
        original = kernels.solve_grid_batch
        kernels.solve_grid_batch = fn
        try:
            start = time.perf_counter()
            tree = train_greedy(train, config, oracle)
            results[name] = time.perf_counter() - start
        finally:
            kernels.solve_grid_batch = original
        print(f"greedy SPO training (n=1000, {tree.n_leaves} leaves) on {name}: "
              f"{results[name]:.3f} s")
    if len(results) == 2:
        print(f"end-to-end speedup: {results['numpy'] / results['compiled']:.2f}x")


if __name__ == "__main__":
    bench_batches()
    print()
    bench_training()
