import json

import numpy as np
from click.testing import CliRunner

from spotrees.cli import main
from spotrees.core import load_tree
from spotrees.exact import read_mps


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_gen_train_evaluate_prune_flow(tmp_path):
    data = tmp_path / "data"
    res = run("gen", "grid-sp", "--n", 80, "--deg", 10, "--eps-bar", 0.25,
              "--test-size", 60, "--seed", 4, "--out", data)
    assert res.exit_code == 0, res.output
    assert (data / "train.csv").exists() and (data / "test.csv").exists()

    tree_file = tmp_path / "tree.json"
    res = run("train", "--input", data / "train.csv", "--loss", "spo",
              "--min-leaf", 10, "--seed", 4, "--oracle", "grid", "--out", tree_file)
    assert res.exit_code == 0, res.output

    res = run("evaluate", "--model", tree_file, "--input", data / "test.csv", "--oracle", "grid")
    assert res.exit_code == 0, res.output
    metrics = json.loads(res.output.strip().splitlines()[-1])
    assert 0.0 <= metrics["normalized_spo_loss"] < 1.0
    assert metrics["n_leaves"] >= 1

    pruned_file = tmp_path / "pruned.json"
    res = run("prune", "--tree", tree_file, "--input", data / "test.csv",
              "--loss", "spo", "--oracle", "grid", "--out", pruned_file)
    assert res.exit_code == 0, res.output
    assert load_tree(pruned_file).n_leaves <= load_tree(tree_file).n_leaves


def test_forest_flow(tmp_path):
    data = tmp_path / "data"
    assert run("gen", "grid-sp", "--n", 60, "--test-size", 40, "--seed", 2, "--out", data).exit_code == 0
    forest_file = tmp_path / "forest.zip"
    res = run("train-forest", "--input", data / "train.csv", "--n-trees", 3,
              "--feature-bag", 3, "--min-leaf", 8, "--seed", 2, "--oracle", "grid",
              "--out", forest_file)
    assert res.exit_code == 0, res.output
    res = run("evaluate", "--model", forest_file, "--input", data / "test.csv", "--oracle", "grid")
    assert res.exit_code == 0, res.output
    assert json.loads(res.output.strip().splitlines()[-1])["n_trees"] == 3


def test_milp_export_and_decode_flow(tmp_path):
    data = tmp_path / "data"
    assert run("gen", "grid-sp", "--n", 40, "--test-size", 10, "--seed", 6, "--out", data).exit_code == 0
    tree_file = tmp_path / "tree.json"
    assert run("train", "--input", data / "train.csv", "--max-depth", 1, "--min-leaf", 5,
               "--seed", 6, "--oracle", "grid", "--out", tree_file).exit_code == 0

    model_file = tmp_path / "model.mps"
    res = run("export-milp", "--input", data / "train.csv", "--depth", 1, "--min-leaf", 5,
              "--seed", 6, "--oracle", "grid", "--warm-start", tree_file, "--out", model_file)
    assert res.exit_code == 0, res.output
    parsed = read_mps(model_file)
    assert parsed.columns
    assert (tmp_path / "model.mps.manifest.json").exists()
    assert (tmp_path / "model.mps.warmstart").exists()

    decoded_file = tmp_path / "decoded.json"
    res = run("decode-solution", "--model", model_file,
              "--solution", str(model_file) + ".warmstart", "--out", decoded_file)
    assert res.exit_code == 0, res.output
    original, decoded = load_tree(tree_file), load_tree(decoded_file)
    assert decoded.n_leaves == original.n_leaves


def test_news_gen_with_lp_oracle(tmp_path):
    data = tmp_path / "news"
    res = run("gen", "news", "--n", 200, "--seed", 1, "--constraint-seed", 2, "--out", data)
    assert res.exit_code == 0, res.output
    assert (data / "constraints.txt").exists()
    tree_file = tmp_path / "tree.json"
    res = run("train", "--input", data / "train.csv", "--max-depth", 2, "--min-leaf", 10,
              "--oracle", "lp", "--constraints", data / "constraints.txt", "--out", tree_file)
    assert res.exit_code == 0, res.output
    res = run("evaluate", "--model", tree_file, "--input", data / "test.csv",
              "--oracle", "lp", "--constraints", data / "constraints.txt")
    assert res.exit_code == 0, res.output


def test_experiment_subcommand_and_determinism(tmp_path):
    args = ["experiment", "--id", "grid-sp", "--trials", 1, "--seed", 9,
            "--depths", "1", "--n-values", "60", "--deg-values", "10",
            "--eps-values", "0.25", "--min-leaf", 8]
    assert run(*args, "--out", tmp_path / "a").exit_code == 0
    assert run(*args, "--out", tmp_path / "b").exit_code == 0
    a = (tmp_path / "a/results.csv").read_bytes()
    assert a == (tmp_path / "b/results.csv").read_bytes()
    assert b"spot" in a


def test_failure_prints_machine_readable_error(tmp_path):
    bogus = tmp_path / "bogus.csv"
    bogus.write_text("x0,c0,c1,weight\n")  # no rows
    res = run("train", "--input", bogus, "--out", tmp_path / "t.json")
    assert res.exit_code == 1
    err_line = res.output.strip().splitlines()[-1]
    record = json.loads(err_line)
    assert "error" in record and "message" in record


def test_lp_oracle_requires_dimension_source(tmp_path):
    res = run("export-milp", "--input", tmp_path / "nope.csv", "--oracle", "lp")
    assert res.exit_code != 0
