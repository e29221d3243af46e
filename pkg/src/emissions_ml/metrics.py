"""Regression metrics and the six-method comparison report."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
import tracemalloc
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Table
from .ensemble import VotingRegressor, fit_model
from .errors import ConfigError, DimensionMismatch, EmptyInput
from .forest import ForestConfig
from .gbt import GbtConfig
from .nn import MlpConfig, TrainConfig
from .preprocess import PreprocessPipeline
from .tree import TreeConfig

log = logging.getLogger(__name__)


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"{pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise EmptyInput("metrics need at least one value")
    return pred, truth


def mae(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def mse_rmse(pred, truth) -> tuple[float, float]:
    pred, truth = _pair(pred, truth)
    mse = float(np.mean((pred - truth) ** 2))
    return mse, math.sqrt(mse)


@dataclass
class MetricReport:
    method_name: str
    mae: float
    mse: float
    rmse: float
    n: int
    paper_mae: float | None = None
    fit_seconds: float = 0.0
    peak_mb: float | None = None

    @classmethod
    def from_predictions(cls, name, pred, truth, **extra) -> "MetricReport":
        m = mae(pred, truth)
        s, r = mse_rmse(pred, truth)
        return cls(name, m, s, r, len(np.ravel(truth)), **extra)


@dataclass(frozen=True)
class Method:
    key: str
    label: str
    members: tuple[str, ...]
    paper_mae: float


# Row order, labels and reference MAEs (g/km) shown in the report.
METHODS = (
    Method("random_forest", "Random Forest", ("random_forest",), 0.65),
    Method("gbt", "XGBoost", ("gbt",), 2.73),
    Method("mlp", "Neural Network", ("mlp",), 0.62),
    Method("mlp+gbt", "Neural Network And XGBoost Ensemble", ("mlp", "gbt"), 2.2),
    Method("mlp+random_forest", "Neural Network And Random Forest Ensemble", ("mlp", "random_forest"), 0.58),
    Method("mlp+gbt+random_forest", "Neural Network,XGBoost,Random Forest Ensemble",
           ("mlp", "gbt", "random_forest"), 1.74),
)
METHOD_KEYS = tuple(m.key for m in METHODS)
_ALIASES = {"xgboost": "gbt", "rf": "random_forest", "nn": "mlp"}


def parse_methods(spec: str) -> tuple[str, ...]:
    keys = []
    for raw in spec.split(","):
        raw = raw.strip().lower()
        if not raw:
            continue
        key = "+".join(_ALIASES.get(p, p) for p in raw.split("+"))
        if key not in METHOD_KEYS:
            raise ConfigError(f"unknown method {raw!r}; choose from {', '.join(METHOD_KEYS)}")
        keys.append(key)
    if not keys:
        raise ConfigError("no methods selected")
    return tuple(k for k in METHOD_KEYS if k in keys)


@dataclass(frozen=True)
class ComparisonConfig:
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    methods: tuple[str, ...] = METHOD_KEYS

    @classmethod
    def full(cls) -> "ComparisonConfig":
        return cls()

    @classmethod
    def desk(cls) -> "ComparisonConfig":
        """Reduced budgets for a few-thousand-row run on one core."""
        return cls(
            forest=ForestConfig(n_estimators=50, tree=TreeConfig(max_depth=9, criterion="absolute")),
            gbt=GbtConfig(n_estimators=200),
            mlp=MlpConfig(train=TrainConfig(epochs=50)),
        )

    def with_seed(self, seed: int) -> "ComparisonConfig":
        return replace(
            self,
            forest=replace(self.forest, seed=seed, tree=replace(self.forest.tree, seed=seed)),
            gbt=replace(self.gbt, seed=seed),
            mlp=replace(self.mlp, init_seed=seed, train=replace(self.mlp.train, seed=seed)),
        )

    def member_config(self, name: str):
        return {"random_forest": self.forest, "gbt": self.gbt, "mlp": self.mlp}[name]


@dataclass
class ComparisonTable:
    reports: list[MetricReport]
    baseline_mae: float | None = None
    predictions: dict = field(default_factory=dict, repr=False)
    member_maes: dict = field(default_factory=dict, repr=False)

    COLUMNS = ("method", "mae", "mse", "rmse", "paper_mae")
    TIMING_COLUMNS = ("fit_seconds", "peak_mb")

    def __post_init__(self):
        names = [r.method_name for r in self.reports]
        if len(set(names)) != len(names):
            raise ValueError("method names must be unique")

    def _rows(self, timings):
        for r in self.reports:
            row = [r.method_name, r.mae, r.mse, r.rmse, r.paper_mae]
            if timings:
                row += [r.fit_seconds, r.peak_mb]
            yield row

    def to_csv(self, timings: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS + (self.TIMING_COLUMNS if timings else ()))
        for row in self._rows(timings):
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()

    def to_json(self, timings: bool = False) -> str:
        cols = self.COLUMNS + (self.TIMING_COLUMNS if timings else ())
        doc = {
            "rows": [dict(zip(cols, row)) for row in self._rows(timings)],
            "baseline_mae": self.baseline_mae,
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_text(self, timings: bool = True) -> str:
        head = ["Method", "MAE", "MSE", "RMSE", "paper-reported MAE"]
        if timings:
            head += ["fit s", "peak MB"]
        body = []
        for r in self.reports:
            row = [r.method_name, f"{r.mae:.4f}", f"{r.mse:.4f}", f"{r.rmse:.4f}",
                   "" if r.paper_mae is None else f"{r.paper_mae:g}"]
            if timings:
                row += [f"{r.fit_seconds:.2f}", "" if r.peak_mb is None else f"{r.peak_mb:.1f}"]
            body.append(row)
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        fmt = lambda row: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)  # noqa: E731
                                    for i, (c, w) in enumerate(zip(row, widths)))
        lines = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
        if self.baseline_mae is not None:
            lines.append(f"(predict-the-mean baseline MAE: {self.baseline_mae:.4f})")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "text", timings: bool = False) -> str:
        if fmt == "csv":
            return self.to_csv(timings)
        if fmt == "json":
            return self.to_json(timings)
        return self.to_text(True)


def compare_methods(train: Table, test: Table, config: ComparisonConfig = ComparisonConfig(),
                    seed: int | None = None, n_jobs: int = 1, track_memory: bool = False,
                    pipeline: PreprocessPipeline | None = None) -> ComparisonTable:
    """Fit preprocessing on ``train``, fit the selected methods, score on ``test``.

    Each base learner is fitted once; ensembles average the already fitted
    members, which is equivalent to refitting them with the same seed.
    """
    if seed is not None:
        config = config.with_seed(seed)
    pipeline = pipeline or PreprocessPipeline()
    Xtr, ytr = pipeline.fit_transform(train)
    Xte, yte = pipeline.transform(test)
    if ytr is None or yte is None:
        raise ConfigError("comparison needs the target column in both tables")

    needed = []
    for key in config.methods:
        method = next(m for m in METHODS if m.key == key)
        needed += [n for n in method.members if n not in needed]

    fitted, preds, seconds, peaks = {}, {}, {}, {}
    for name in needed:
        log.info("fitting %s", name)
        if track_memory:
            tracemalloc.start()
        t0 = time.perf_counter()
        fitted[name] = fit_model(config.member_config(name), Xtr, ytr, n_jobs=n_jobs)
        seconds[name] = time.perf_counter() - t0
        if track_memory:
            peaks[name] = tracemalloc.get_traced_memory()[1] / 2**20
            tracemalloc.stop()
        preds[name] = fitted[name].predict(Xte)

    table = ComparisonTable([], baseline_mae=mae(np.full(len(yte), ytr.mean()), yte))
    for key in config.methods:
        method = next(m for m in METHODS if m.key == key)
        if len(method.members) == 1:
            model = fitted[method.members[0]]
        else:
            model = VotingRegressor([fitted[n] for n in method.members])
        pred = model.predict(Xte) if len(method.members) > 1 else preds[method.members[0]]
        peak = max((peaks[n] for n in method.members if n in peaks), default=None)
        table.reports.append(MetricReport.from_predictions(
            method.label, pred, yte, paper_mae=method.paper_mae,
            fit_seconds=sum(seconds[n] for n in method.members), peak_mb=peak,
        ))
        table.predictions[key] = pred
    table.member_maes = {n: mae(preds[n], yte) for n in needed}
    table.truth = yte
    table.models = fitted
    return table
