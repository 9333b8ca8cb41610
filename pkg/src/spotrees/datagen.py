"""Synthetic dataset generators.

All generators draw from PCG64 streams split by purpose: a stream is keyed
by ``SeedSequence([seed, purpose_tag])`` so that, for example, the feature
draws of a grid instance do not shift when the noise model changes. Identical
seeds give bit-identical datasets on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .oracles import PolytopeLpOracle

_STREAM_TAGS = {
    "features": 0x01,
    "noise": 0x02,
    "bmatrix": 0x03,
    "constraints": 0x04,
    "weights": 0x05,
    "model": 0x06,
}


def _rng(seed: int, purpose: str, extra: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _STREAM_TAGS[purpose], int(extra)])
    )


# ---------------------------------------------------------------------------
# Two-edge shortest path: one continuous feature, two candidate edges.


@dataclass(frozen=True)
class TwoEdgeConfig:
    n: int = 10_000
    noise: bool = False  # multiplicative U[0.75, 1.25] on costs when set
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")


def two_edge_costs(x: np.ndarray) -> np.ndarray:
    """Edge costs (5x + 1.9, (5x + 0.4)^2) for feature values x."""
    c1 = 5.0 * x + 1.9
    c2 = (5.0 * x + 0.4) ** 2
    return np.column_stack([c1, c2])


def two_edge_boundary() -> float:
    """Feature value where the two edge costs cross (optimal decision flips)."""
    return (0.2 + math.sqrt(7.0)) / 10.0


def gen_two_edge(config: TwoEdgeConfig) -> Dataset:
    x = _rng(config.seed, "features").uniform(0.0, 1.0, size=config.n)
    C = two_edge_costs(x)
    if config.noise:
        C = C * _rng(config.seed, "noise").uniform(0.75, 1.25, size=C.shape)
    return Dataset(X=x.reshape(-1, 1), C=C)


# ---------------------------------------------------------------------------
# Grid shortest path with a Bernoulli mixing matrix and polynomial warping.


@dataclass(frozen=True)
class GridSPConfig:
    n: int = 200
    deg: int = 2
    noise_half_width: float = 0.0  # costs scaled by U[1 - nhw, 1 + nhw]
    seed: int = 0
    n_features: int = 5
    width: int = 4
    height: int = 4
    test_size: int = 1000

    def __post_init__(self):
        if self.n < 1 or self.test_size < 0:
            raise ValueError("sizes must be positive")
        if self.deg < 1:
            raise ValueError("deg must be a positive integer")
        if self.noise_half_width < 0:
            raise ValueError("noise half-width must be >= 0")


def grid_costs(
    X: np.ndarray, B: np.ndarray, deg: int, eps: np.ndarray | None
) -> np.ndarray:
    """Cost matrix ((B x / sqrt(p) + 1)^deg) * eps, one row per observation."""
    p = X.shape[1]
    base = (X @ B.T / math.sqrt(p) + 1.0) ** deg
    return base if eps is None else base * eps


def gen_grid_sp(config: GridSPConfig) -> tuple[Dataset, Dataset, np.ndarray]:
    """Training set, test set (same mixing matrix), and the matrix itself."""
    d = config.height * (config.width - 1) + config.width * (config.height - 1)
    B = _rng(config.seed, "bmatrix").integers(0, 2, size=(d, config.n_features))
    B = B.astype(float)

    def draw(n: int, extra: int) -> Dataset:
        X = _rng(config.seed, "features", extra).uniform(size=(n, config.n_features))
        if config.noise_half_width > 0:
            eps = _rng(config.seed, "noise", extra).uniform(
                1.0 - config.noise_half_width, 1.0 + config.noise_half_width, size=(n, d)
            )
        else:
            eps = None
        return Dataset(X=X, C=grid_costs(X, B, config.deg, eps))

    return draw(config.n, 0), draw(config.test_size, 1), B


# ---------------------------------------------------------------------------
# News-style recommendation: maximize click probability over a constrained
# simplex. Costs are stored negated so the shared minimizing oracle applies;
# the decision loss is then exactly the shortfall in click probability.


@dataclass(frozen=True)
class NewsConfig:
    n: int = 1000
    n_articles: int = 6
    n_constraints: int = 5
    n_features: int = 5
    seed: int = 0  # ground-truth model and sample draws
    sample_seed: int = 0  # vary to get fresh samples from the same model
    constraint_seed: int = 0
    weight_sigma: float = 1.0  # weights ~ LogNormal(0, sigma)

    def __post_init__(self):
        if self.n_articles < 2:
            raise ValueError("need at least two article types")
        if self.n_constraints < 0:
            raise ValueError("constraint count must be >= 0")


def sample_news_constraints(
    config: NewsConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Exponential(1) constraint rows with b = 1, resampled until the uniform
    recommendation e/d stays feasible."""
    d = config.n_articles
    rng = _rng(config.constraint_seed, "constraints")
    rows = []
    while len(rows) < config.n_constraints:
        a = rng.exponential(1.0, size=d)
        if a.mean() <= 1.0:
            rows.append(a)
    A = np.array(rows).reshape(-1, d)
    return A, np.ones(config.n_constraints)


def gen_news(config: NewsConfig) -> tuple[Dataset, PolytopeLpOracle]:
    d, p = config.n_articles, config.n_features
    model_rng = _rng(config.seed, "model")
    G = model_rng.normal(0.0, 2.0, size=(d, p))
    g0 = model_rng.normal(0.0, 1.0, size=d)

    X = _rng(config.seed, "features", config.sample_seed).uniform(size=(config.n, p))
    logits = X @ G.T + g0
    clicks = np.clip(1.0 / (1.0 + np.exp(-logits)), 0.01, 0.99)
    weights = np.exp(
        _rng(config.seed, "weights", config.sample_seed).normal(
            0.0, config.weight_sigma, size=config.n
        )
    )
    A, b = sample_news_constraints(config)
    oracle = PolytopeLpOracle(d, A, b)
    return Dataset(X=X, C=-clicks, weights=weights), oracle
