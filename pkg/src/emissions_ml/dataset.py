"""Loading, cleaning and splitting schema-typed tabular data."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyResult,
    IoError,
    MalformedCsv,
    MissingColumn,
    TooFewRows,
)

KINDS = ("numeric", "nominal", "ordinal", "target")


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str
    ordinal_order: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"column {self.name!r}: unknown kind {self.kind!r}")
        order = tuple(self.ordinal_order or ())
        object.__setattr__(self, "ordinal_order", order)
        if self.kind == "ordinal":
            if not order:
                raise ConfigError(f"column {self.name!r}: ordinal_order required")
            if len(set(order)) != len(order):
                raise ConfigError(f"column {self.name!r}: duplicate ordinal categories")
        elif order:
            raise ConfigError(f"column {self.name!r}: ordinal_order only valid for ordinal columns")

    @property
    def is_real(self) -> bool:
        return self.kind in ("numeric", "target")

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.ordinal_order:
            d["ordinal_order"] = list(self.ordinal_order)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        try:
            return cls(d["name"], d["kind"], tuple(d.get("ordinal_order") or ()))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad schema entry {d!r}") from exc


def validate_schema(schema: Sequence[ColumnSchema]) -> list[ColumnSchema]:
    schema = list(schema)
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise ConfigError("column names must be unique")
    n_target = sum(c.kind == "target" for c in schema)
    if n_target != 1:
        raise ConfigError(f"schema needs exactly one target column, found {n_target}")
    return schema


def load_schema(path) -> list[ColumnSchema]:
    """Read a JSON array of ``{name, kind, ordinal_order?}`` objects."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"schema file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read schema {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError(f"schema {path} must be a JSON array")
    return validate_schema(ColumnSchema.from_dict(d) for d in raw)


def save_schema(schema: Sequence[ColumnSchema], path) -> None:
    Path(path).write_text(json.dumps([c.to_dict() for c in schema], indent=2) + "\n")


@dataclass(frozen=True)
class Table:
    """Column-oriented table.

    Real columns (numeric/target) are float64 arrays; nominal and ordinal
    columns are object arrays of strings. Missing cells hold NaN / ``""``
    and are flagged in ``missing``.
    """

    schema: tuple[ColumnSchema, ...]
    columns: dict[str, np.ndarray]
    missing: dict[str, np.ndarray]
    n_rows: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        for c in self.schema:
            if len(self.columns[c.name]) != self.n_rows or len(self.missing[c.name]) != self.n_rows:
                raise ValueError(f"column {c.name!r} length differs from n_rows={self.n_rows}")

    @classmethod
    def from_columns(cls, schema, columns: dict) -> "Table":
        """Build a table from plain sequences; None / NaN / "" mark missing cells."""
        schema = tuple(schema)
        cols, miss = {}, {}
        n = None
        for c in schema:
            values = list(columns[c.name])
            n = len(values) if n is None else n
            if c.is_real:
                arr = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
                m = ~np.isfinite(arr)
                arr[m] = np.nan
            else:
                arr = np.array(["" if v is None else str(v) for v in values], dtype=object)
                m = arr == ""
            cols[c.name] = arr
            miss[c.name] = np.asarray(m, dtype=bool)
        return cls(schema, cols, miss, n or 0)

    @property
    def target(self) -> ColumnSchema | None:
        for c in self.schema:
            if c.kind == "target":
                return c
        return None

    @property
    def missing_mask(self) -> np.ndarray:
        """Boolean matrix [n_rows x n_columns] in schema order."""
        if not self.schema:
            return np.zeros((self.n_rows, 0), dtype=bool)
        return np.column_stack([self.missing[c.name] for c in self.schema])

    def take(self, rows) -> "Table":
        rows = np.asarray(rows, dtype=np.intp)
        return Table(
            self.schema,
            {k: v[rows] for k, v in self.columns.items()},
            {k: v[rows] for k, v in self.missing.items()},
            len(rows),
        )

    def head(self, n: int) -> "Table":
        return self.take(np.arange(min(n, self.n_rows)))

    def equals(self, other: "Table") -> bool:
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        for c in self.schema:
            a, b = self.columns[c.name], other.columns[c.name]
            if c.is_real:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not np.array_equal(a, b):
                return False
            if not np.array_equal(self.missing[c.name], other.missing[c.name]):
                return False
        return True


def _parse_real(cell: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        return math.nan
    return v if math.isfinite(v) else math.nan


def load_csv(path, schema: Sequence[ColumnSchema], require_target: bool = True) -> Table:
    """Parse a header-first, comma-delimited UTF-8 CSV under ``schema``.

    Columns not named in the schema are ignored. Empty or unparseable cells
    are recorded as missing rather than raising. With ``require_target=False``
    an absent target column is tolerated and dropped from the table schema.
    """
    path = Path(path)
    schema = list(schema)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(1, "empty file") from None
        except csv.Error as exc:
            raise MalformedCsv(reader.line_num, str(exc)) from None
        header = [h.strip() for h in header]
        position = {h: i for i, h in enumerate(header)}
        used = []
        for c in schema:
            if c.name not in position:
                if c.kind == "target" and not require_target:
                    continue
                raise MissingColumn(c.name)
            used.append(c)
        raw: dict[str, list] = {c.name: [] for c in used}
        width = len(header)
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != width:
                    raise MalformedCsv(reader.line_num, f"expected {width} fields, got {len(row)}")
                for c in used:
                    raw[c.name].append(row[position[c.name]].strip())
        except csv.Error as exc:
            raise MalformedCsv(reader.line_num, str(exc)) from None
        except UnicodeDecodeError as exc:
            raise MalformedCsv(reader.line_num + 1, "invalid UTF-8") from exc

    n = len(raw[used[0].name]) if used else 0
    columns, missing = {}, {}
    for c in used:
        cells = raw[c.name]
        if c.is_real:
            arr = np.array([_parse_real(s) for s in cells], dtype=np.float64)
            missing[c.name] = np.isnan(arr)
        else:
            arr = np.array(cells, dtype=object)
            missing[c.name] = np.array([s == "" for s in cells], dtype=bool)
        columns[c.name] = arr
    return Table(tuple(used), columns, missing, n)


def drop_null_rows(t: Table) -> Table:
    if t.n_rows == 0:
        raise EmptyResult("table has no rows")
    keep = ~t.missing_mask.any(axis=1)
    if not keep.any():
        raise EmptyResult("every row has at least one missing cell")
    if keep.all():
        return t
    return t.take(np.flatnonzero(keep))


def correlation_matrix(t: Table) -> tuple[list[str], np.ndarray]:
    """Pearson correlations between numeric and target columns.

    Returns the column names alongside the matrix. Any entry involving a
    zero-variance column is 0, including its diagonal element.
    """
    names = [c.name for c in t.schema if c.is_real]
    if t.n_rows < 2:
        raise TooFewRows("correlation needs at least 2 rows")
    if not names:
        return names, np.zeros((0, 0))
    data = np.column_stack([t.columns[n] for n in names])
    if not np.isfinite(data).all():
        raise ValueError("correlation_matrix requires no missing cells; call drop_null_rows first")
    centered = data - data.mean(axis=0)
    ss = np.sqrt((centered**2).sum(axis=0))
    ok = ss > 0
    scaled = np.zeros_like(centered)
    scaled[:, ok] = centered[:, ok] / ss[ok]
    corr = scaled.T @ scaled
    corr = np.clip(0.5 * (corr + corr.T), -1.0, 1.0)
    idx = np.flatnonzero(ok)
    corr[idx, idx] = 1.0
    return names, corr


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_permutation(n: int, seed: int) -> np.ndarray:
    """Seeded Fisher-Yates permutation of ``range(n)``."""
    rng = np.random.default_rng(seed)
    perm = list(range(n))
    # j_i uniform on {0..i}, drawn in one batch
    draws = (rng.random(n) * np.arange(1, n + 1)).astype(np.int64).tolist()
    for i in range(n - 1, 0, -1):
        j = draws[i]
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.intp)


def train_test_split(t: Table, spec: SplitSpec = SplitSpec()) -> tuple[Table, Table]:
    n = t.n_rows
    if n < 2:
        raise TooFewRows("split needs at least 2 rows")
    n_train = int(round(spec.train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    order = split_permutation(n, spec.seed) if spec.shuffle else np.arange(n)
    return t.take(order[:n_train]), t.take(order[n_train:])
