"""Delimited-text dataset files and their sidecar manifests.

A dataset file is a CSV with header ``x0..x{p-1}, c0..c{d-1}, weight`` and one
row per observation; floats are written in shortest round-trip form. A sidecar
``<path>.manifest.json`` records the generating config, seed, and categorical
feature flags.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import Dataset


def write_dataset(path, dataset: Dataset, manifest: dict | None = None) -> None:
    path = Path(path)
    header = (
        [f"x{j}" for j in range(dataset.feature_dim)]
        + [f"c{k}" for k in range(dataset.decision_dim)]
        + ["weight"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            writer.writerow(
                [repr(float(v)) for v in dataset.X[i]]
                + [repr(float(v)) for v in dataset.C[i]]
                + [repr(float(dataset.weights[i]))]
            )
    sidecar = dict(manifest or {})
    if dataset.categorical is not None:
        sidecar["categorical"] = [bool(v) for v in dataset.categorical]
    if sidecar:
        with open(manifest_path(path), "w") as fh:
            json.dump(sidecar, fh, indent=1, sort_keys=True)
            fh.write("\n")


def manifest_path(path) -> Path:
    return Path(str(path) + ".manifest.json")


def read_manifest(path) -> dict:
    mp = manifest_path(path)
    if not mp.exists():
        return {}
    with open(mp) as fh:
        return json.load(fh)


def read_dataset(path) -> Dataset:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(tok) for tok in row] for row in reader if row]
    x_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    c_cols = [i for i, name in enumerate(header) if name.startswith("c")]
    w_col = header.index("weight")
    data = np.array(rows, dtype=float)
    if data.size == 0:
        raise ValueError(f"dataset file {path} has no rows")
    manifest = read_manifest(path)
    categorical = manifest.get("categorical")
    return Dataset(
        X=data[:, x_cols],
        C=data[:, c_cols],
        weights=data[:, w_col],
        categorical=None if categorical is None else np.array(categorical, dtype=bool),
    )
