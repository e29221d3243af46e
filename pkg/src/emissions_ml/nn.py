"""Dense ReLU network trained with Adam on an MAE loss (float64 numpy)."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyTable, NonFiniteInput, TrainingError

log = logging.getLogger(__name__)

HIDDEN_WIDTHS = (128, 512, 512, 512, 256, 256)


@dataclass(frozen=True)
class MlpArchitecture:
    layer_widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or widths[-1] != 1 or min(widths) < 1:
            raise ConfigError(f"invalid layer widths {widths}")

    @classmethod
    def default(cls, n_inputs: int, hidden=HIDDEN_WIDTHS) -> "MlpArchitecture":
        return cls((n_inputs, *hidden, 1))

    @property
    def shapes(self):
        w = self.layer_widths
        return list(zip(w[:-1], w[1:]))


def count_parameters(arch: MlpArchitecture) -> int:
    return sum(i * o + o for i, o in arch.shapes)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, params, **hyper) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **hyper)


def adam_step(params, grads, state: AdamState):
    """One in-place Adam update of every array in ``params``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionMismatch("params, grads and state differ in length")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise DimensionMismatch(f"param shape {p.shape} != grad shape {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params, state


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: "MlpConfig | None" = None

    model_type = "mlp"

    @property
    def architecture(self) -> MlpArchitecture:
        return MlpArchitecture((self.weights[0].shape[0], *(w.shape[1] for w in self.weights)))

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.config)

    def predict(self, X) -> np.ndarray:
        return forward(self, X)[0]

    def to_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "layer_widths": list(self.architecture.layer_widths),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "adam": {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
            "config": None if self.config is None else self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        arch = MlpArchitecture(tuple(d["layer_widths"]))
        weights = [np.array(w, dtype=np.float64).reshape(i, o) for w, (i, o) in zip(d["weights"], arch.shapes)]
        biases = [np.array(b, dtype=np.float64) for b in d["biases"]]
        cfg = None if d.get("config") is None else MlpConfig.from_dict(d["config"])
        return cls(weights, biases, cfg)


def he_init(arch: MlpArchitecture, seed: int = 42) -> MlpModel:
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i, o in arch.shapes:
        weights.append(rng.normal(0.0, np.sqrt(2.0 / i), size=(i, o)))
        biases.append(np.zeros(o))
    return MlpModel(weights, biases)


def forward(model: MlpModel, X):
    """Returns ``(output, cache)``; cache holds each layer input and pre-activation."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected input width {model.n_features}, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NonFiniteInput("X contains non-finite values")
    a = X
    cache = []
    for W, b in zip(model.weights, model.biases):
        z = a @ W + b
        cache.append((a, z))
        a = np.maximum(z, 0.0)
    return a[:, 0], cache


def loss_and_grad(model: MlpModel, X, y):
    """Mean absolute error and its gradient, ordered like ``model.params``."""
    y = np.asarray(y, dtype=np.float64)
    pred, cache = forward(model, X)
    if y.shape != pred.shape:
        raise DimensionMismatch(f"y shape {y.shape} != prediction shape {pred.shape}")
    diff = pred - y
    loss = float(np.mean(np.abs(diff)))
    # np.sign(0) == 0 keeps an exact fit stationary
    delta = (np.sign(diff) / len(y))[:, None]
    grads_w, grads_b = [], []
    for k in range(len(model.weights) - 1, -1, -1):
        a_in, z = cache[k]
        delta = delta * (z > 0)
        grads_w.append(a_in.T @ delta)
        grads_b.append(delta.sum(axis=0))
        if k:
            delta = delta @ model.weights[k].T
    grads = []
    for gw, gb in zip(reversed(grads_w), reversed(grads_b)):
        grads += [gw, gb]
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 128
    validation_split: float = 0.2
    loss: str = "mae"
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 <= self.validation_split < 1.0:
            raise ConfigError("validation_split must lie in [0, 1)")
        if self.loss != "mae":
            raise ConfigError("only the mae loss is supported")


@dataclass
class History:
    train_mae: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.train_mae)

    def to_csv(self) -> str:
        lines = ["epoch,train_mae,val_mae"]
        for i, (t, v) in enumerate(zip(self.train_mae, self.val_mae), start=1):
            lines.append(f"{i},{t!r},{v!r}")
        return "\n".join(lines) + "\n"


def validation_holdout(n: int, split: float, seed: int):
    """Seeded shuffle; the last ``round(split * n)`` rows are held out."""
    n_val = int(round(split * n)) if split > 0 else 0
    if split > 0 and n < 2:
        raise EmptyTable("need at least 2 rows with a validation split")
    n_val = min(max(n_val, 1 if split > 0 else 0), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return perm[: n - n_val], perm[n - n_val:]


def train(model: MlpModel, X, y, config: TrainConfig = TrainConfig(),
          learning_rate: float = 1e-3, state: AdamState | None = None):
    """Mini-batch Adam on the MAE loss. Updates ``model`` in place.

    Returns ``(model, history)``; history carries train and validation MAE
    measured after every epoch. Validation rows never enter a gradient.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0:
        raise EmptyTable("no training rows")
    if len(X) != len(y):
        raise DimensionMismatch("X and y differ in length")
    tr, va = validation_holdout(len(X), config.validation_split, config.seed)
    Xt, yt, Xv, yv = X[tr], y[tr], X[va], y[va]
    params = model.params
    if state is None:
        state = AdamState.zeros_like(params, learning_rate=learning_rate)
    rng = np.random.default_rng([config.seed, 1])
    history = History()
    for epoch in range(config.epochs):
        order = rng.permutation(len(Xt))
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, len(order), config.batch_size):
                b = order[start:start + config.batch_size]
                _, grads = loss_and_grad(model, Xt[b], yt[b])
                adam_step(params, grads, state)
            pt = model.predict(Xt)
        history.train_mae.append(float(np.mean(np.abs(pt - yt))))
        if not np.isfinite(history.train_mae[-1]):
            raise TrainingError(f"training diverged at epoch {epoch + 1} (non-finite loss)")
        history.val_mae.append(float(np.mean(np.abs(model.predict(Xv) - yv))) if len(va) else float("nan"))
        if epoch == 0 and not np.any(pt > 0):
            log.warning("all network outputs are 0 after the first epoch (dead ReLU output)")
    model.adam_state_ = state
    return model, history


@dataclass(frozen=True)
class MlpConfig:
    hidden_widths: tuple[int, ...] = HIDDEN_WIDTHS
    learning_rate: float = 1e-3
    train: TrainConfig = field(default_factory=TrainConfig)
    init_seed: int = 42
    max_init_attempts: int = 10

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_widths"] = list(self.hidden_widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlpConfig":
        d = dict(d)
        d["train"] = TrainConfig(**d["train"])
        d["hidden_widths"] = tuple(d["hidden_widths"])
        return cls(**d)


def init_live(arch: MlpArchitecture, X, seed: int, attempts: int = 10) -> MlpModel:
    """He-initialize, redrawing from derived seeds while the output unit is dead on ``X``.

    With ReLU on the output layer, an initialization whose output
    pre-activation is <= 0 on every row gets zero gradient forever.
    """
    for attempt in range(max(attempts, 1)):
        model = he_init(arch, seed if attempt == 0 else int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0]))
        if len(X) == 0 or np.any(model.predict(X) > 0):
            if attempt:
                log.info("re-drew initialization %d time(s) to avoid a dead output unit", attempt)
            return model
    log.warning("output unit dead after %d initialization attempts", attempts)
    return model


def fit_mlp(X, y, config: MlpConfig = MlpConfig()):
    X = np.asarray(X, dtype=np.float64)
    arch = MlpArchitecture.default(X.shape[1], config.hidden_widths)
    model = init_live(arch, X, config.init_seed, config.max_init_attempts)
    model.config = config
    log.info("mlp layer widths %s, %d trainable parameters", arch.layer_widths, count_parameters(arch))
    model, history = train(model, X, y, config.train, learning_rate=config.learning_rate)
    model.history_ = history
    return model
