"""Command-line driver: dataset generation, training, pruning, forests,
MILP export/decode, evaluation, and full experiment runs.

Every failure exits nonzero after printing one machine-readable JSON error
line to stderr."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import io as dsio
from .core import evaluate_model, load_tree, save_tree
from .datagen import (
    GridSPConfig,
    NewsConfig,
    TwoEdgeConfig,
    gen_grid_sp,
    gen_news,
    gen_two_edge,
)
from .exact import (
    ExactConfig,
    build_milp,
    decode_solution,
    read_solution_file,
    warm_start,
    write_mps,
    write_solution_file,
)
from .experiments import ExperimentSpec, run_experiment
from .forest import ForestConfig, load_forest, save_forest, train_forest
from .greedy import GreedyConfig, prune, train_greedy
from .oracles import (
    GridShortestPathOracle,
    PolytopeLpOracle,
    load_constraints,
    save_constraints,
)


def _fail(exc: BaseException) -> None:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    click.echo(line, err=True)
    sys.exit(1)


def _oracle_options(fn):
    fn = click.option(
        "--oracle",
        "oracle_kind",
        type=click.Choice(["grid", "lp"]),
        default="grid",
        show_default=True,
        help="Decision problem family.",
    )(fn)
    fn = click.option("--grid-width", default=4, show_default=True)(fn)
    fn = click.option("--grid-height", default=4, show_default=True)(fn)
    fn = click.option(
        "--constraints",
        "constraints_file",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Constraint-set file for the lp oracle (defaults to a plain simplex).",
    )(fn)
    fn = click.option(
        "--lp-dim",
        default=None,
        type=int,
        help="Decision dimension for the lp oracle when no constraint file is given.",
    )(fn)
    return fn


def _build_oracle(oracle_kind, grid_width, grid_height, constraints_file, lp_dim, d_hint=None):
    if oracle_kind == "grid":
        return GridShortestPathOracle(grid_width, grid_height)
    if constraints_file:
        A, b = load_constraints(constraints_file)
        return PolytopeLpOracle(A.shape[1], A, b)
    d = lp_dim or d_hint
    if d is None:
        raise click.UsageError("lp oracle needs --constraints or --lp-dim")
    return PolytopeLpOracle(int(d))


@click.group()
@click.option("--seed", default=0, show_default=True, help="Default seed for subcommands.")
@click.option("--out", default=None, type=click.Path(), help="Default output path.")
@click.option("--threads", default=1, show_default=True, help="Worker processes for experiments.")
@click.pass_context
def main(ctx, seed, out, threads):
    """Train and evaluate decision trees that minimize decision (SPO) loss."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, out=out, threads=threads)


def _resolve_out(ctx, out, required=True):
    path = out or ctx.obj.get("out")
    if required and path is None:
        raise click.UsageError("an output path is required (--out)")
    return path


@main.command()
@click.argument("kind", type=click.Choice(["two-edge", "grid-sp", "news"]))
@click.option("--n", default=1000, show_default=True)
@click.option("--deg", default=2, show_default=True)
@click.option("--eps-bar", default=0.0, show_default=True, help="Multiplicative noise half-width.")
@click.option("--test-size", default=1000, show_default=True)
@click.option("--constraint-seed", default=0, show_default=True)
@click.option("--noise/--no-noise", default=False, help="Two-edge multiplicative noise flag.")
@click.option("--seed", default=None, type=int)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def gen(ctx, kind, n, deg, eps_bar, test_size, constraint_seed, noise, seed, out):
    """Generate a synthetic dataset (CSV + manifest) into a directory."""
    try:
        seed = seed if seed is not None else ctx.obj["seed"]
        out_dir = Path(_resolve_out(ctx, out))
        out_dir.mkdir(parents=True, exist_ok=True)
        if kind == "two-edge":
            cfg = TwoEdgeConfig(n=n, noise=noise, seed=seed)
            train = gen_two_edge(cfg)
            test = gen_two_edge(TwoEdgeConfig(n=test_size, noise=noise, seed=seed + 1))
            dsio.write_dataset(out_dir / "train.csv", train, {"config": cfg.__dict__})
            dsio.write_dataset(out_dir / "test.csv", test, {"config": cfg.__dict__})
        elif kind == "grid-sp":
            cfg = GridSPConfig(
                n=n, deg=deg, noise_half_width=eps_bar, seed=seed, test_size=test_size
            )
            train, test, _ = gen_grid_sp(cfg)
            dsio.write_dataset(out_dir / "train.csv", train, {"config": cfg.__dict__})
            dsio.write_dataset(out_dir / "test.csv", test, {"config": cfg.__dict__})
        else:
            cfg = NewsConfig(n=n, seed=seed, constraint_seed=constraint_seed)
            train, oracle = gen_news(cfg)
            test, _ = gen_news(replace(cfg, sample_seed=1))
            dsio.write_dataset(out_dir / "train.csv", train, {"config": cfg.__dict__})
            dsio.write_dataset(out_dir / "test.csv", test, {"config": cfg.__dict__})
            save_constraints(out_dir / "constraints.txt", oracle.A_ub, oracle.b_ub)
        click.echo(f"wrote {out_dir}/train.csv and {out_dir}/test.csv")
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--input", "input_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--loss", type=click.Choice(["spo", "mse"]), default="spo", show_default=True)
@click.option("--max-depth", default=None, type=int, help="Unrestricted when omitted.")
@click.option("--min-leaf", default=20.0, show_default=True, help="Minimum leaf weight.")
@click.option("--quantiles", default=100, show_default=True)
@click.option("--perturb", default=1e-6, show_default=True, help="Tie-break cost noise scale.")
@click.option("--seed", default=None, type=int)
@click.option("--out", default=None, type=click.Path())
@_oracle_options
@click.pass_context
def train(ctx, input_file, loss, max_depth, min_leaf, quantiles, perturb, seed, out, **oracle_kw):
    """Train a single greedy tree and write it as JSON."""
    try:
        seed = seed if seed is not None else ctx.obj["seed"]
        dataset = dsio.read_dataset(input_file)
        if perturb:
            dataset = dataset.with_cost_perturbation(scale=perturb, seed=seed)
        oracle = _build_oracle(**oracle_kw, d_hint=dataset.decision_dim)
        config = GreedyConfig(
            loss=loss,
            max_depth=max_depth,
            min_leaf_weight=min_leaf,
            n_quantiles=quantiles,
            seed=seed,
        )
        tree = train_greedy(dataset, config, oracle)
        out_path = _resolve_out(ctx, out)
        save_tree(tree, out_path)
        click.echo(f"wrote {out_path} (depth {tree.depth}, {tree.n_leaves} leaves)")
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("prune")
@click.option("--tree", "tree_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "input_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Validation dataset.")
@click.option("--loss", type=click.Choice(["spo", "mse"]), default="spo", show_default=True)
@click.option("--out", default=None, type=click.Path())
@_oracle_options
@click.pass_context
def prune_cmd(ctx, tree_file, input_file, loss, out, **oracle_kw):
    """Cost-complexity prune a tree against a validation dataset."""
    try:
        tree = load_tree(tree_file)
        validation = dsio.read_dataset(input_file)
        oracle = _build_oracle(**oracle_kw, d_hint=validation.decision_dim)
        pruned = prune(tree, validation, loss, oracle)
        out_path = _resolve_out(ctx, out)
        save_tree(pruned, out_path)
        click.echo(
            f"wrote {out_path} ({tree.n_leaves} -> {pruned.n_leaves} leaves)"
        )
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("train-forest")
@click.option("--input", "input_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--loss", type=click.Choice(["spo", "mse"]), default="spo", show_default=True)
@click.option("--n-trees", default=100, show_default=True)
@click.option("--feature-bag", default=None, type=int, help="Features sampled per split.")
@click.option("--min-leaf", default=20.0, show_default=True)
@click.option("--quantiles", default=100, show_default=True)
@click.option("--perturb", default=1e-6, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--out", default=None, type=click.Path())
@_oracle_options
@click.pass_context
def train_forest_cmd(
    ctx, input_file, loss, n_trees, feature_bag, min_leaf, quantiles, perturb, seed, out, **oracle_kw
):
    """Train a bootstrap forest and write it as a zip container."""
    try:
        seed = seed if seed is not None else ctx.obj["seed"]
        dataset = dsio.read_dataset(input_file)
        if perturb:
            dataset = dataset.with_cost_perturbation(scale=perturb, seed=seed)
        oracle = _build_oracle(**oracle_kw, d_hint=dataset.decision_dim)
        config = ForestConfig(
            n_trees=n_trees,
            feature_bag_size=feature_bag,
            loss=loss,
            seed=seed,
            base=GreedyConfig(
                loss=loss, max_depth=None, min_leaf_weight=min_leaf, n_quantiles=quantiles
            ),
        )
        forest = train_forest(dataset, config, oracle)
        out_path = _resolve_out(ctx, out)
        save_forest(forest, out_path)
        click.echo(f"wrote {out_path} ({n_trees} trees)")
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("export-milp")
@click.option("--input", "input_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", default=1, show_default=True)
@click.option("--min-leaf", default=20.0, show_default=True)
@click.option("--alpha", default=0.0, show_default=True)
@click.option("--round-features", default=None, type=float, help="Feature rounding precision.")
@click.option("--perturb", default=1e-6, show_default=True)
@click.option("--warm-start", "warm_start_file", default=None, type=click.Path(exists=True, dir_okay=False), help="Tree JSON used to produce a warm-start solution file.")
@click.option("--seed", default=None, type=int)
@click.option("--out", default=None, type=click.Path())
@_oracle_options
@click.pass_context
def export_milp(
    ctx, input_file, depth, min_leaf, alpha, round_features, perturb, warm_start_file, seed, out, **oracle_kw
):
    """Build the exact-training MILP and write it in MPS format.

    A manifest sidecar records everything needed to rebuild the model when
    decoding an external solution."""
    try:
        seed = seed if seed is not None else ctx.obj["seed"]
        dataset = dsio.read_dataset(input_file)
        if perturb:
            dataset = dataset.with_cost_perturbation(scale=perturb, seed=seed)
        oracle = _build_oracle(**oracle_kw, d_hint=dataset.decision_dim)
        config = ExactConfig(
            depth=depth,
            min_leaf_weight=min_leaf,
            alpha=alpha,
            feature_rounding=round_features,
            warm_start_tree=load_tree(warm_start_file) if warm_start_file else None,
        )
        model = build_milp(dataset, config, oracle)
        out_path = Path(_resolve_out(ctx, out))
        write_mps(model, out_path)
        manifest = {
            "input": str(Path(input_file).resolve()),
            "depth": depth,
            "min_leaf": min_leaf,
            "alpha": alpha,
            "round_features": round_features,
            "perturb": perturb,
            "seed": seed,
            "oracle": oracle_kw,
        }
        with open(str(out_path) + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
        if config.warm_start_tree is not None:
            assignment = warm_start(model, config.warm_start_tree)
            write_solution_file(model, assignment, str(out_path) + ".warmstart")
        click.echo(
            f"wrote {out_path} ({model.n_variables} variables, {len(model.constraints)} constraints)"
        )
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("decode-solution")
@click.option("--model", "model_file", required=True, type=click.Path(), help="MPS path written by export-milp (its manifest sidecar must exist).")
@click.option("--solution", "solution_file", required=True, type=click.Path(exists=True, dir_okay=False), help="'name value' pairs from an external solver.")
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def decode_solution_cmd(ctx, model_file, solution_file, out):
    """Rebuild the model from its manifest and decode a solution into a tree."""
    try:
        with open(str(model_file) + ".manifest.json") as fh:
            manifest = json.load(fh)
        dataset = dsio.read_dataset(manifest["input"])
        if manifest.get("perturb"):
            dataset = dataset.with_cost_perturbation(
                scale=manifest["perturb"], seed=manifest["seed"]
            )
        oracle = _build_oracle(**manifest["oracle"], d_hint=dataset.decision_dim)
        config = ExactConfig(
            depth=manifest["depth"],
            min_leaf_weight=manifest["min_leaf"],
            alpha=manifest["alpha"],
            feature_rounding=manifest["round_features"],
        )
        model = build_milp(dataset, config, oracle)
        tree = decode_solution(model, read_solution_file(solution_file))
        out_path = _resolve_out(ctx, out)
        save_tree(tree, out_path)
        click.echo(f"wrote {out_path} (depth {tree.depth}, {tree.n_leaves} leaves)")
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Tree JSON or forest zip.")
@click.option("--input", "input_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, type=click.Path())
@_oracle_options
@click.pass_context
def evaluate(ctx, model_file, input_file, out, **oracle_kw):
    """Evaluate a model on a dataset; print a JSON metrics record."""
    try:
        dataset = dsio.read_dataset(input_file)
        oracle = _build_oracle(**oracle_kw, d_hint=dataset.decision_dim)
        if str(model_file).endswith(".zip"):
            model = load_forest(model_file)
        else:
            model = load_tree(model_file)
        metrics = evaluate_model(model, dataset, oracle)
        record = json.dumps(metrics, sort_keys=True)
        out_path = _resolve_out(ctx, out, required=False)
        if out_path:
            Path(out_path).write_text(record + "\n")
        click.echo(record)
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--id", "experiment_id", required=True, type=click.Choice(["two-edge", "grid-sp", "news"]))
@click.option("--trials", default=10, show_default=True)
@click.option("--seed", default=None, type=int, help="Master seed.")
@click.option("--depths", default="1,2,3,none", show_default=True, help="Comma list; 'none' = unrestricted.")
@click.option("--n-values", default="200", show_default=True)
@click.option("--deg-values", default="2,10", show_default=True)
@click.option("--eps-values", default="0,0.25", show_default=True)
@click.option("--forests/--no-forests", default=False, show_default=True)
@click.option("--forest-trees", default=100, show_default=True)
@click.option("--exact-depths", default="", help="Comma list of exhaustive-exact depths.")
@click.option("--min-leaf", default=20.0, show_default=True)
@click.option("--prune/--no-prune", "do_prune", default=True, show_default=True)
@click.option("--threads", default=None, type=int)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def experiment(
    ctx,
    experiment_id,
    trials,
    seed,
    depths,
    n_values,
    deg_values,
    eps_values,
    forests,
    forest_trees,
    exact_depths,
    min_leaf,
    do_prune,
    threads,
    out,
):
    """Run a full experiment grid and write results/summary CSVs."""
    try:
        seed = seed if seed is not None else ctx.obj["seed"]
        threads = threads if threads is not None else ctx.obj["threads"]
        out_dir = _resolve_out(ctx, out)

        def parse_depths(text):
            vals = []
            for tok in text.split(","):
                tok = tok.strip().lower()
                if not tok:
                    continue
                vals.append(None if tok in ("none", "unrestricted") else int(tok))
            return tuple(vals)

        def parse_nums(text, cast):
            return tuple(cast(tok) for tok in text.split(",") if tok.strip())

        spec = ExperimentSpec(
            experiment=experiment_id,
            out_dir=str(out_dir),
            trials=trials,
            master_seed=seed,
            depths=parse_depths(depths),
            n_values=parse_nums(n_values, int),
            deg_values=parse_nums(deg_values, int),
            noise_values=parse_nums(eps_values, float),
            min_leaf_weight=min_leaf,
            prune=do_prune,
            include_forests=forests,
            forest_trees=forest_trees,
            include_exact_depths=parse_nums(exact_depths, int),
            threads=threads,
        )
        paths = run_experiment(spec)
        click.echo(f"wrote {paths['results']} and {paths['summary']}")
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
