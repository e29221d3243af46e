"""Bagged random forest regressor."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .tree import Tree, TreeConfig, check_xy, fit_tree, predict_tree


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 250
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_depth=9, criterion="absolute"))
    bootstrap: bool = True
    max_features_fraction: float = 1.0
    seed: int = 42

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if not 0.0 < self.max_features_fraction <= 1.0:
            raise ConfigError("max_features_fraction must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ForestConfig":
        d = dict(d)
        d["tree"] = TreeConfig(**d["tree"])
        return cls(**d)


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Independent RNG stream for tree ``index``; does not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, size=n)


@dataclass
class ForestModel:
    trees: list[Tree]
    config: ForestConfig
    n_features: int

    model_type = "random_forest"

    def predict(self, X) -> np.ndarray:
        return predict_forest(self, X)

    def to_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "config": self.config.to_dict(),
            "n_features": self.n_features,
            "trees": [t.to_nested() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        n_features = int(d["n_features"])
        return cls(
            [Tree.from_nested(t, n_features) for t in d["trees"]],
            ForestConfig.from_dict(d["config"]),
            n_features,
        )


def _fit_one(X, y, config: ForestConfig, i: int) -> Tree:
    rng = tree_rng(config.seed, i)
    n, d = X.shape
    if config.bootstrap:
        idx = bootstrap_indices(n, rng)
        Xi, yi = X[idx], y[idx]
    else:
        Xi, yi = X, y
    max_features = None
    if config.max_features_fraction < 1.0:
        max_features = max(1, int(math.ceil(config.max_features_fraction * d)))
    return fit_tree(Xi, yi, None, config.tree, max_features=max_features, rng=rng)


def fit_forest(X, y, config: ForestConfig = ForestConfig(), n_jobs: int = 1) -> ForestModel:
    """Fit ``n_estimators`` trees, each on an n-draw bootstrap resample.

    ``n_jobs`` only changes scheduling; tree ``i`` always uses RNG stream
    ``(seed, i)`` so the fitted forest is identical for any worker count.
    """
    X, y, _ = check_xy(X, y)
    if len(y) < 1:
        raise DimensionMismatch("cannot fit a forest on zero rows")
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda i: _fit_one(X, y, config, i), range(config.n_estimators)))
    else:
        trees = [_fit_one(X, y, config, i) for i in range(config.n_estimators)]
    return ForestModel(trees, config, X.shape[1])


def predict_forest(model: ForestModel, X) -> np.ndarray:
    X = check_xy(X)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"forest expects {model.n_features} features, got {X.shape[1]}")
    total = np.zeros(len(X))
    for t in model.trees:
        total += predict_tree(t, X)
    return total / len(model.trees)
