"""Second-order (Newton) gradient boosted trees for squared-error regression."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptySpace, TrainingError
from .tree import Tree, _Builder, check_xy, predict_tree

OBJECTIVES = ("squared_error",)
# accepted spellings of the squared objective; "reg:linear" is the deprecated alias
OBJECTIVE_ALIASES = {"reg:linear": "squared_error", "reg: linear": "squared_error",
                     "reg:squarederror": "squared_error"}


@dataclass(frozen=True)
class GbtConfig:
    n_estimators: int = 1000
    learning_rate: float = 0.05
    objective: str = "squared_error"
    max_depth: int = 6
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    seed: int = 42

    def __post_init__(self):
        obj = OBJECTIVE_ALIASES.get(self.objective, self.objective)
        object.__setattr__(self, "objective", obj)
        if obj not in OBJECTIVES:
            raise ConfigError(f"unsupported objective {self.objective!r}")
        if self.n_estimators < 0:
            raise ConfigError("n_estimators must be >= 0")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ConfigError("reg_lambda, gamma and min_child_weight must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GbtConfig":
        return cls(**d)


def grad_hess_squared(pred, y):
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if pred.shape != y.shape:
        raise DimensionMismatch(f"pred shape {pred.shape} != y shape {y.shape}")
    return pred - y, np.ones_like(pred)


def leaf_weight(G, H, reg_lambda):
    return -G / (H + reg_lambda)


def leaf_weight_and_gain(G_L, H_L, G_R, H_R, config: GbtConfig):
    """Child weights and the regularized structure gain of a candidate split.

    ``accepted`` is True only when the gain is strictly positive and both
    children carry at least ``min_child_weight`` hessian mass.
    """
    lam = config.reg_lambda
    w_l = leaf_weight(G_L, H_L, lam)
    w_r = leaf_weight(G_R, H_R, lam)
    gain = 0.5 * (G_L * G_L / (H_L + lam) + G_R * G_R / (H_R + lam)
                  - (G_L + G_R) ** 2 / (H_L + H_R + lam)) - config.gamma
    accepted = gain > 0 and H_L >= config.min_child_weight and H_R >= config.min_child_weight
    return w_l, w_r, gain, accepted


def _best_gbt_split(X, g, h, config: GbtConfig):
    n, d = X.shape
    if n < 2:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    HL = np.cumsum(h[order], axis=0)[:-1]
    G, H = g.sum(), h.sum()
    GR, HR = G - GL, H - HL
    lam = config.reg_lambda
    gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam)) - config.gamma
    ok = (xs[:-1] < xs[1:]) & (HL >= config.min_child_weight) & (HR >= config.min_child_weight)
    gain = np.where(ok, gain, -np.inf)
    # feature-major flat argmax: lowest feature, then lowest threshold, wins ties
    flat = gain.T
    j = int(np.argmax(flat))
    f, k = divmod(j, n - 1)
    if not flat[f, k] > 0:
        return None
    lo, hi = xs[k, f], xs[k + 1, f]
    t = 0.5 * (lo + hi)
    if not t < hi:
        t = lo
    return f, float(t), float(flat[f, k])


def grow_gbt_tree(X, g, h, config: GbtConfig) -> Tree:
    """One boosting tree; leaves hold raw Newton weights (before shrinkage)."""
    b = _Builder()

    def grow(idx, depth):
        gi, hi = g[idx], h[idx]
        split = _best_gbt_split(X[idx], gi, hi, config) if depth < config.max_depth else None
        if split is None:
            return b.leaf(leaf_weight(gi.sum(), hi.sum(), config.reg_lambda))
        f, t, _ = split
        node = b.internal(f, t)
        go_left = X[idx, f] <= t
        b.left[node] = grow(idx[go_left], depth + 1)
        b.right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(g)), 0)
    return b.finish(X.shape[1])


@dataclass
class GbtModel:
    base_score: float
    trees: list[Tree]
    config: GbtConfig
    n_features: int

    model_type = "gbt"

    def predict(self, X) -> np.ndarray:
        return predict_gbt(self, X)

    def to_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "config": self.config.to_dict(),
            "n_features": self.n_features,
            "base_score": self.base_score,
            "trees": [t.to_nested() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtModel":
        n_features = int(d["n_features"])
        return cls(
            float(d["base_score"]),
            [Tree.from_nested(t, n_features) for t in d["trees"]],
            GbtConfig.from_dict(d["config"]),
            n_features,
        )


def fit_gbt(X, y, config: GbtConfig = GbtConfig(), callback=None) -> GbtModel:
    """Boost from ``mean(y)``; ``callback(round, running_prediction)`` runs after each round."""
    X, y, _ = check_xy(X, y)
    if len(y) < 1:
        raise DimensionMismatch("cannot fit on zero rows")
    with np.errstate(over="ignore"):
        base = float(np.mean(y))
    if not np.isfinite(base):
        raise TrainingError("mean of the target overflows")
    pred = np.full(len(y), base)
    trees = []
    for r in range(config.n_estimators):
        g, h = grad_hess_squared(pred, y)
        tree = grow_gbt_tree(X, g, h, config)
        trees.append(tree)
        pred += config.learning_rate * predict_tree(tree, X)
        if not np.isfinite(pred).all():
            raise TrainingError(f"boosting diverged at round {r + 1}")
        if callback is not None:
            callback(r, pred)
    model = GbtModel(base, trees, config, X.shape[1])
    model.train_prediction_ = pred
    return model


def predict_gbt(model: GbtModel, X) -> np.ndarray:
    X = check_xy(X)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    out = np.full(len(X), model.base_score)
    for t in model.trees:
        out += model.config.learning_rate * predict_tree(t, X)
    return out


@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusive

    def sample(self, rng):
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def sample(self, rng):
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def sample(self, rng):
        return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))


def default_search_space() -> dict:
    """A documented default search space, not a tuned or reproduced one."""
    return {
        "n_estimators": IntRange(100, 1000),
        "learning_rate": LogUniform(0.01, 0.3),
        "max_depth": IntRange(3, 9),
    }


def sample_config(space: dict, rng, base: GbtConfig) -> GbtConfig:
    params = {}
    for name in sorted(space):
        spec = space[name]
        if isinstance(spec, (list, tuple)):
            params[name] = spec[int(rng.integers(0, len(spec)))]
        else:
            params[name] = spec.sample(rng)
    return replace(base, **params)


def random_search(space: dict, k: int, train, valid, seed: int = 42,
                  base: GbtConfig = GbtConfig()):
    """Sample ``k`` configurations, fit each on ``train``, score MAE on ``valid``.

    ``train`` and ``valid`` are ``(X, y)`` pairs. Returns the best config
    (first sampled wins ties) and a list of per-trial rows.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if not space or any(isinstance(s, (list, tuple)) and len(s) == 0 for s in space.values()):
        raise EmptySpace("search space is empty")
    from .metrics import mae

    rng = np.random.default_rng(seed)
    Xt, yt = train
    Xv, yv = valid
    rows, best, best_score = [], None, math.inf
    for trial in range(k):
        cfg = sample_config(space, rng, base)
        score = mae(fit_gbt(Xt, yt, cfg).predict(Xv), yv)
        rows.append({"trial": trial, **{name: getattr(cfg, name) for name in sorted(space)}, "mae": score})
        if score < best_score:
            best, best_score = cfg, score
    return best, rows
