"""Voting regressor: weighted average of independently fitted members."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .forest import ForestConfig, ForestModel, fit_forest
from .gbt import GbtConfig, GbtModel, fit_gbt
from .nn import MlpConfig, MlpModel, fit_mlp


class Regressor(Protocol):
    model_type: str

    def predict(self, X) -> np.ndarray: ...

    def to_dict(self) -> dict: ...


def fit_model(config, X, y, n_jobs: int = 1) -> Regressor:
    """Fit whichever learner ``config`` describes."""
    if isinstance(config, ForestConfig):
        return fit_forest(X, y, config, n_jobs=n_jobs)
    if isinstance(config, GbtConfig):
        return fit_gbt(X, y, config)
    if isinstance(config, MlpConfig):
        return fit_mlp(X, y, config)
    raise ConfigError(f"no learner for config type {type(config).__name__}")


def model_from_dict(d: dict) -> Regressor:
    kind = d.get("model_type")
    if kind == "random_forest":
        return ForestModel.from_dict(d)
    if kind == "gbt":
        return GbtModel.from_dict(d)
    if kind == "mlp":
        return MlpModel.from_dict(d)
    if kind == "voting":
        return VotingRegressor.from_dict(d)
    raise ConfigError(f"unknown model_type {kind!r}")


@dataclass
class VotingRegressor:
    members: list
    weights: list[float] = field(default_factory=list)

    model_type = "voting"

    def __post_init__(self):
        if not self.members:
            raise ConfigError("a voting regressor needs at least one member")
        if not self.weights:
            self.weights = [1.0] * len(self.members)
        self.weights = [float(w) for w in self.weights]
        if len(self.weights) != len(self.members):
            raise ConfigError("weights and members differ in length")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ConfigError("weights must be >= 0 with a positive sum")

    def predict(self, X) -> np.ndarray:
        return predict_vote(self, X)

    def to_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "members": [m.to_dict() for m in self.members],
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VotingRegressor":
        return cls([model_from_dict(m) for m in d["members"]], list(d["weights"]))


def fit_members(specs: Sequence, X, y, weights=None, n_jobs: int = 1) -> VotingRegressor:
    """Fit every member config on the same full ``(X, y)``, preserving order."""
    return VotingRegressor([fit_model(s, X, y, n_jobs=n_jobs) for s in specs], list(weights or []))


def predict_vote(ens: VotingRegressor, X) -> np.ndarray:
    total, wsum = None, 0.0
    for m, w in zip(ens.members, ens.weights):
        p = np.asarray(m.predict(X), dtype=np.float64)
        if total is None:
            total = np.zeros_like(p)
        elif p.shape != total.shape:
            raise DimensionMismatch("members returned predictions of different shapes")
        total += w * p
        wsum += w
    return total / wsum
