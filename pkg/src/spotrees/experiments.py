"""Reproducible experiment runs: generate, train, evaluate, aggregate.

A run fans a master seed out to independent (cell, trial) jobs through a
stable hash, so any cell can be reproduced in isolation and results merge
deterministically regardless of scheduling. Output is a results CSV (one row
per trial/cell/model), a summary CSV (per-cell means/standard deviations and
pairwise percentage improvements), and a manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .core import Tree, evaluate_model
from .datagen import (
    GridSPConfig,
    NewsConfig,
    TwoEdgeConfig,
    gen_grid_sp,
    gen_news,
    gen_two_edge,
)
from .exact import EnumerationTooLarge, ExactConfig, exhaustive_exact
from .forest import ForestConfig, tune_feature_bag_size
from .greedy import GreedyConfig, prune, split_validation, train_greedy
from .oracles import GridShortestPathOracle, PolytopeLpOracle

RESULTS_SCHEMA = "# spotrees-results v1"
SUMMARY_SCHEMA = "# spotrees-summary v1"

RESULT_FIELDS = [
    "experiment",
    "cell",
    "trial",
    "model",
    "depth",
    "normalized_spo_loss",
    "spo_loss",
    "mse",
    "tree_depth",
    "n_leaves",
    "status",
]


def stable_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str  # "two-edge" | "grid-sp" | "news"
    out_dir: str
    trials: int = 10
    master_seed: int = 0
    depths: tuple[int | None, ...] = (1, 2, 3, None)
    two_edge_n: int = 10_000
    n_values: tuple[int, ...] = (200,)
    deg_values: tuple[int, ...] = (2, 10)
    noise_values: tuple[float, ...] = (0.0, 0.25)
    news_n: int = 1000
    min_leaf_weight: float = 20.0
    n_quantiles: int = 100
    prune: bool = True
    include_forests: bool = False
    forest_trees: int = 100
    forest_bag_grid: tuple[int, ...] = (2, 3, 4, 5)
    include_exact_depths: tuple[int, ...] = ()
    perturbation: float = 1e-6
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in ("two-edge", "grid-sp", "news"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.depths:
            raise ValueError("depth grid must be nonempty")


def _cells(spec: ExperimentSpec) -> list[tuple[str, dict]]:
    if spec.experiment == "two-edge":
        return [(f"twoedge-n{spec.two_edge_n}", {"n": spec.two_edge_n})]
    if spec.experiment == "grid-sp":
        out = []
        for n in spec.n_values:
            for deg in spec.deg_values:
                for eps in spec.noise_values:
                    out.append(
                        (f"grid-n{n}-deg{deg}-eps{eps:g}", {"n": n, "deg": deg, "eps": eps})
                    )
        return out
    return [(f"news-cs{k}", {"constraint_seed": k, "n": spec.news_n}) for k in range(spec.trials)]


def _depth_name(depth) -> str:
    return "unrestricted" if depth is None else str(depth)


def _make_data(spec: ExperimentSpec, params: dict, seed: int):
    """(train, test, oracle) for one job; training costs get tie-break noise."""
    if spec.experiment == "two-edge":
        train = gen_two_edge(TwoEdgeConfig(n=params["n"], seed=seed))
        test = gen_two_edge(TwoEdgeConfig(n=10_000, seed=stable_seed(seed, "test")))
        oracle = PolytopeLpOracle(2)
    elif spec.experiment == "grid-sp":
        train, test, _ = gen_grid_sp(
            GridSPConfig(
                n=params["n"],
                deg=params["deg"],
                noise_half_width=params["eps"],
                seed=seed,
            )
        )
        oracle = GridShortestPathOracle(4, 4)
    else:
        cfg = NewsConfig(
            n=params["n"],
            seed=seed,
            sample_seed=0,
            constraint_seed=params["constraint_seed"],
        )
        train, oracle = gen_news(cfg)
        test, _ = gen_news(replace(cfg, sample_seed=1))
    if spec.perturbation:
        train = train.with_cost_perturbation(scale=spec.perturbation, seed=seed)
    return train, test, oracle


def _tree_row(spec, cell, trial, model_name, depth, tree: Tree, test, oracle) -> dict:
    metrics = evaluate_model(tree, test, oracle)
    return {
        "experiment": spec.experiment,
        "cell": cell,
        "trial": trial,
        "model": model_name,
        "depth": _depth_name(depth),
        "normalized_spo_loss": metrics["normalized_spo_loss"],
        "spo_loss": metrics["spo_loss"],
        "mse": metrics["mse"],
        "tree_depth": metrics.get("depth", ""),
        "n_leaves": metrics.get("n_leaves", ""),
        "status": "ok",
    }


def run_cell_trial(spec: ExperimentSpec, cell: str, params: dict, trial: int) -> list[dict]:
    """All model rows for one (cell, trial): single trees, exact, forests."""
    seed = stable_seed(spec.master_seed, cell, trial)
    train, test, oracle = _make_data(spec, params, seed)
    rows: list[dict] = []

    if spec.prune:
        fit_part, val_part = split_validation(train, 0.2, seed)
    else:
        fit_part, val_part = train, None

    def run_model(name, depth, fn):
        try:
            tree = fn()
            rows.append(_tree_row(spec, cell, trial, name, depth, tree, test, oracle))
        except EnumerationTooLarge:
            rows.append(
                {
                    "experiment": spec.experiment,
                    "cell": cell,
                    "trial": trial,
                    "model": name,
                    "depth": _depth_name(depth),
                    "normalized_spo_loss": "",
                    "spo_loss": "",
                    "mse": "",
                    "tree_depth": "",
                    "n_leaves": "",
                    "status": "skipped",
                }
            )
        except Exception as exc:  # partial failures must not abort the run
            rows.append(
                {
                    "experiment": spec.experiment,
                    "cell": cell,
                    "trial": trial,
                    "model": name,
                    "depth": _depth_name(depth),
                    "normalized_spo_loss": "",
                    "spo_loss": "",
                    "mse": "",
                    "tree_depth": "",
                    "n_leaves": "",
                    "status": f"error: {exc}",
                }
            )

    for loss, model_name in (("spo", "spot"), ("mse", "cart")):
        for depth in spec.depths:
            cfg = GreedyConfig(
                loss=loss,
                max_depth=depth,
                min_leaf_weight=spec.min_leaf_weight,
                n_quantiles=spec.n_quantiles,
                seed=seed,
            )

            def fit(cfg=cfg, loss=loss):
                tree = train_greedy(fit_part, cfg, oracle)
                if val_part is not None:
                    tree = prune(tree, val_part, loss, oracle)
                return tree

            run_model(model_name, depth, fit)

    for depth in spec.include_exact_depths:
        cfg = ExactConfig(
            depth=depth,
            min_leaf_weight=spec.min_leaf_weight,
            n_quantiles=spec.n_quantiles,
        )

        def fit_exact(cfg=cfg):
            tree = exhaustive_exact(fit_part, cfg, oracle)
            if val_part is not None:
                tree = prune(tree, val_part, "spo", oracle)
            return tree

        run_model("spot_exact", depth, fit_exact)

    if spec.include_forests:
        tune_val = val_part
        if tune_val is None:
            fit_part_f, tune_val = split_validation(train, 0.2, seed)
        else:
            fit_part_f = fit_part
        for loss, model_name in (("spo", "spo_forest"), ("mse", "cart_forest")):

            def fit_forest(loss=loss, model_name=model_name):
                forest, _ = tune_feature_bag_size(
                    fit_part_f,
                    tune_val,
                    ForestConfig(
                        n_trees=spec.forest_trees,
                        loss=loss,
                        seed=stable_seed(seed, model_name),
                        base=GreedyConfig(
                            loss=loss,
                            max_depth=None,
                            min_leaf_weight=spec.min_leaf_weight,
                            n_quantiles=spec.n_quantiles,
                        ),
                    ),
                    oracle,
                    grid=spec.forest_bag_grid,
                )
                metrics = evaluate_model(forest, test, oracle)
                rows.append(
                    {
                        "experiment": spec.experiment,
                        "cell": cell,
                        "trial": trial,
                        "model": model_name,
                        "depth": "forest",
                        "normalized_spo_loss": metrics["normalized_spo_loss"],
                        "spo_loss": metrics["spo_loss"],
                        "mse": metrics["mse"],
                        "tree_depth": "",
                        "n_leaves": metrics.get("n_leaves", ""),
                        "status": "ok",
                    }
                )

            try:
                fit_forest()
            except Exception as exc:
                rows.append(
                    {
                        "experiment": spec.experiment,
                        "cell": cell,
                        "trial": trial,
                        "model": model_name,
                        "depth": "forest",
                        "normalized_spo_loss": "",
                        "spo_loss": "",
                        "mse": "",
                        "tree_depth": "",
                        "n_leaves": "",
                        "status": f"error: {exc}",
                    }
                )
    return rows


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _job(args):
    spec, cell, params, trial = args
    return run_cell_trial(spec, cell, params, trial)


def run_experiment(spec: ExperimentSpec) -> dict[str, Path]:
    """Execute the full grid and write results/summary/manifest files."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = _cells(spec)
    trials_per_cell = 1 if spec.experiment == "news" else spec.trials
    jobs = [
        (spec, cell, params, trial)
        for cell, params in cells
        for trial in range(trials_per_cell)
    ]
    if spec.threads > 1:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(job) for job in jobs]
    rows = [row for batch in results for row in batch]
    rows.sort(key=lambda r: (r["cell"], r["trial"], r["model"], r["depth"]))

    results_path = out_dir / "results.csv"
    with open(results_path, "w", newline="") as fh:
        fh.write(RESULTS_SCHEMA + "\n")
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(row[k]) for k in RESULT_FIELDS})

    summary_path = out_dir / "summary.csv"
    write_summary(rows, summary_path)

    manifest = {"spec": asdict(spec), "cells": [c for c, _ in cells]}
    manifest_file = out_dir / "manifest.json"
    with open(manifest_file, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return {"results": results_path, "summary": summary_path, "manifest": manifest_file}


def aggregate(rows: list[dict]) -> list[dict]:
    """Per (cell, model, depth) mean/std plus spot-vs-cart improvements."""
    groups: dict[tuple[str, str, str], list[dict]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        groups.setdefault((row["cell"], row["model"], str(row["depth"])), []).append(row)

    out = []
    means: dict[tuple[str, str, str], float] = {}
    for (cell, model, depth), members in sorted(groups.items()):
        losses = np.array([float(r["normalized_spo_loss"]) for r in members])
        leaves = [float(r["n_leaves"]) for r in members if r["n_leaves"] != ""]
        means[(cell, model, depth)] = float(losses.mean())
        out.append(
            {
                "kind": "mean",
                "cell": cell,
                "model": model,
                "depth": depth,
                "baseline": "",
                "trials": len(members),
                "mean_normalized_spo_loss": float(losses.mean()),
                "std_normalized_spo_loss": float(losses.std(ddof=0)),
                "mean_n_leaves": float(np.mean(leaves)) if leaves else "",
                "pct_improvement": "",
            }
        )
    pairs = [("spot", "cart"), ("spo_forest", "cart_forest")]
    cells = sorted({cell for cell, _, _ in means})
    depths = sorted({depth for _, _, depth in means})
    for challenger, baseline in pairs:
        for cell in cells:
            for depth in depths:
                key_c, key_b = (cell, challenger, depth), (cell, baseline, depth)
                if key_c in means and key_b in means and means[key_b] != 0:
                    out.append(
                        {
                            "kind": "improvement",
                            "cell": cell,
                            "model": challenger,
                            "depth": depth,
                            "baseline": baseline,
                            "trials": "",
                            "mean_normalized_spo_loss": means[key_c],
                            "std_normalized_spo_loss": "",
                            "mean_n_leaves": "",
                            "pct_improvement": 100.0 * (means[key_b] - means[key_c]) / means[key_b],
                        }
                    )
    return out


SUMMARY_FIELDS = [
    "kind",
    "cell",
    "model",
    "depth",
    "baseline",
    "trials",
    "mean_normalized_spo_loss",
    "std_normalized_spo_loss",
    "mean_n_leaves",
    "pct_improvement",
]


def write_summary(rows: list[dict], path) -> None:
    summary = aggregate(rows)
    with open(path, "w", newline="") as fh:
        fh.write(SUMMARY_SCHEMA + "\n")
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        for row in summary:
            writer.writerow({k: _format_cell(row[k]) for k in SUMMARY_FIELDS})


def read_results(path) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
