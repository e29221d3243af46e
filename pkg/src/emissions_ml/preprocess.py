"""Min-max scaling plus one-hot and ordinal encoding of a :class:`Table`."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ColumnSchema, Table
from .errors import ConfigError, DataError, EmptyTable, NotFitted, UnknownOrdinalCategory

FORMAT_VERSION = 1


@dataclass
class PreprocessPipeline:
    """Fitted feature encoder.

    Output columns follow schema order: a numeric column contributes one
    scaled value, a nominal column a block of indicators over its sorted
    training vocabulary, an ordinal column its 0-based rank.
    """

    schema: tuple[ColumnSchema, ...] = ()
    minmax: dict[str, tuple[float, float]] = field(default_factory=dict)
    onehot: dict[str, list[str]] = field(default_factory=dict)
    ordinal: dict[str, dict[str, int]] = field(default_factory=dict)
    feature_names_out: list[str] = field(default_factory=list)
    fitted: bool = False

    @property
    def features(self) -> list[ColumnSchema]:
        return [c for c in self.schema if c.kind != "target"]

    @property
    def numeric_names(self) -> list[str]:
        return [c.name for c in self.schema if c.kind == "numeric"]

    @property
    def n_features_out(self) -> int:
        return len(self.feature_names_out)

    def fit(self, train: Table) -> "PreprocessPipeline":
        if train.n_rows < 1:
            raise EmptyTable("cannot fit preprocessing on an empty table")
        if train.missing_mask.any():
            raise DataError("training table has missing cells; call drop_null_rows first")
        self.schema = tuple(train.schema)
        self.minmax, self.onehot, self.ordinal = {}, {}, {}
        names = []
        for c in self.features:
            col = train.columns[c.name]
            if c.kind == "numeric":
                self.minmax[c.name] = (float(col.min()), float(col.max()))
                names.append(c.name)
            elif c.kind == "nominal":
                vocab = sorted(set(col.tolist()))
                self.onehot[c.name] = vocab
                names.extend(f"{c.name}={v}" for v in vocab)
            else:
                ranks = {v: i for i, v in enumerate(c.ordinal_order)}
                for v in set(col.tolist()):
                    if v not in ranks:
                        raise UnknownOrdinalCategory(c.name, v)
                self.ordinal[c.name] = ranks
                names.append(c.name)
        self.feature_names_out = names
        self.fitted = True
        return self

    def _check(self):
        if not self.fitted:
            raise NotFitted("preprocessing pipeline is not fitted")

    def transform(self, t: Table) -> tuple[np.ndarray, np.ndarray | None]:
        """Encode ``t`` into ``(X, y)``; ``y`` is None when ``t`` has no target column."""
        self._check()
        blocks = []
        for c in self.features:
            if c.name not in t.columns:
                raise DataError(f"column {c.name!r} missing from table")
            if t.missing[c.name].any():
                raise DataError(f"column {c.name!r} has missing cells")
            col = t.columns[c.name]
            if c.kind == "numeric":
                lo, hi = self.minmax[c.name]
                col = np.asarray(col, dtype=np.float64)
                if hi > lo:
                    blocks.append(((col - lo) / (hi - lo))[:, None])
                else:
                    blocks.append(np.zeros((t.n_rows, 1)))
            elif c.kind == "nominal":
                vocab = self.onehot[c.name]
                index = {v: i for i, v in enumerate(vocab)}
                block = np.zeros((t.n_rows, len(vocab)))
                for r, v in enumerate(col.tolist()):
                    j = index.get(v)
                    if j is not None:
                        block[r, j] = 1.0
                blocks.append(block)
            else:
                ranks = self.ordinal[c.name]
                out = np.empty(t.n_rows)
                for r, v in enumerate(col.tolist()):
                    if v not in ranks:
                        raise UnknownOrdinalCategory(c.name, v)
                    out[r] = ranks[v]
                blocks.append(out[:, None])
        X = np.hstack(blocks) if blocks else np.zeros((t.n_rows, 0))
        X = np.ascontiguousarray(X, dtype=np.float64)
        target = t.target
        y = None
        if target is not None:
            if t.missing[target.name].any():
                raise DataError(f"target column {target.name!r} has missing cells")
            y = np.asarray(t.columns[target.name], dtype=np.float64).copy()
        return X, y

    def fit_transform(self, t: Table):
        return self.fit(t).transform(t)

    def inverse_transform_numeric(self, X_cols) -> np.ndarray:
        """Undo min-max scaling; columns follow :attr:`numeric_names` order."""
        self._check()
        X_cols = np.asarray(X_cols, dtype=np.float64)
        names = self.numeric_names
        if X_cols.ndim != 2 or X_cols.shape[1] != len(names):
            raise DataError(f"expected {len(names)} numeric columns, got shape {X_cols.shape}")
        out = np.empty_like(X_cols)
        for j, name in enumerate(names):
            lo, hi = self.minmax[name]
            out[:, j] = X_cols[:, j] * (hi - lo) + lo
        return out

    def numeric_columns(self, X) -> np.ndarray:
        """Select the scaled numeric columns out of a full transformed matrix."""
        idx = [self.feature_names_out.index(n) for n in self.numeric_names]
        return np.asarray(X)[:, idx]

    def to_dict(self) -> dict:
        self._check()
        return {
            "format_version": FORMAT_VERSION,
            "schema": [c.to_dict() for c in self.schema],
            "minmax": {k: {"min": lo, "max": hi} for k, (lo, hi) in self.minmax.items()},
            "onehot": {k: list(v) for k, v in self.onehot.items()},
            "ordinal": {k: [c for c, _ in sorted(v.items(), key=lambda kv: kv[1])]
                        for k, v in self.ordinal.items()},
            "feature_names_out": list(self.feature_names_out),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessPipeline":
        if d.get("format_version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported pipeline format_version {d.get('format_version')!r}")
        return cls(
            schema=tuple(ColumnSchema.from_dict(c) for c in d["schema"]),
            minmax={k: (float(v["min"]), float(v["max"])) for k, v in d["minmax"].items()},
            onehot={k: list(v) for k, v in d["onehot"].items()},
            ordinal={k: {c: i for i, c in enumerate(v)} for k, v in d["ordinal"].items()},
            feature_names_out=list(d["feature_names_out"]),
            fitted=True,
        )
