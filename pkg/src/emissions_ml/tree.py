"""CART regression trees with squared-error or absolute-error splitting.

Split search is exact: every midpoint between consecutive distinct values of
every candidate feature is scored, at O(d * n log n) per node. For the
absolute criterion the prefix/suffix absolute deviations around the running
weighted median come from a Fenwick tree over target ranks (numba kernel);
:func:`prefix_abs_deviation_naive` is the quadratic reference it is tested
against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import ConfigError, DimensionMismatch, NonFiniteInput

CRITERIA = ("squared", "absolute")

# relative slack used both for "strictly positive decrease" and for ties
REL_TOL = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = 9
    min_samples_leaf: int = 1
    criterion: str = "squared"
    seed: int = 0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")


class Split(NamedTuple):
    feature: int
    threshold: float
    decrease: float


@dataclass
class Tree:
    """Flat array form of a binary tree; ``feature == -1`` marks a leaf.

    Node 0 is the root. Internal nodes send ``x[feature] <= threshold`` to
    ``left``, everything else to ``right``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] < 0:
                best = max(best, d)
            else:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def predict(self, X) -> np.ndarray:
        return predict_tree(self, X)

    def to_nested(self) -> dict:
        def build(i):
            if self.feature[i] < 0:
                return {"v": float(self.value[i])}
            return {
                "f": int(self.feature[i]),
                "t": float(self.threshold[i]),
                "l": build(self.left[i]),
                "r": build(self.right[i]),
            }

        return build(0)

    @classmethod
    def from_nested(cls, root: dict, n_features: int) -> "Tree":
        b = _Builder()

        def walk(node):
            if "v" in node:
                return b.leaf(node["v"])
            i = b.internal(node["f"], node["t"])
            b.left[i] = walk(node["l"])
            b.right[i] = walk(node["r"])
            return i

        walk(root)
        return b.finish(n_features)

    def to_dict(self) -> dict:
        return {"n_features": self.n_features, "root": self.to_nested()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls.from_nested(d["root"], int(d["n_features"]))

    def structurally_equal(self, other: "Tree") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value")
        )


class _Builder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def _new(self, f, t, v):
        self.feature.append(f)
        self.threshold.append(t)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(v)
        return len(self.feature) - 1

    def leaf(self, value):
        return self._new(-1, 0.0, float(value))

    def internal(self, feature, threshold):
        return self._new(int(feature), float(threshold), 0.0)

    def finish(self, n_features) -> Tree:
        return Tree(
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.value, dtype=np.float64),
            int(n_features),
        )


def check_xy(X, y=None, sample_weights=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NonFiniteInput("X contains non-finite values")
    if y is None:
        return X
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or len(y) != len(X):
        raise DimensionMismatch(f"y shape {y.shape} does not match X rows {len(X)}")
    if not np.isfinite(y).all():
        raise NonFiniteInput("y contains non-finite values")
    if sample_weights is None:
        w = np.ones(len(y))
    else:
        w = np.asarray(sample_weights, dtype=np.float64)
        if w.shape != y.shape:
            raise DimensionMismatch("sample_weights length differs from y")
        if not np.isfinite(w).all() or (w < 0).any():
            raise NonFiniteInput("sample_weights must be finite and non-negative")
    return X, y, w


def weighted_lower_median(y, w) -> float:
    order = np.argsort(y, kind="stable")
    ys, cw = y[order], np.cumsum(w[order])
    k = int(np.searchsorted(cw, 0.5 * cw[-1], side="left"))
    return float(ys[min(k, len(ys) - 1)])


def leaf_value(y, w, criterion: str) -> float:
    if criterion == "absolute":
        return weighted_lower_median(y, w)
    return float(np.sum(w * y) / np.sum(w))


@njit(cache=True, nogil=True)
def _prefix_abs_deviation(y, w, rank):
    """out[k] = sum_{i<=k} w_i |y_i - m_k|, m_k the weighted lower median of y[:k+1].

    ``rank`` is a permutation of 0..n-1 giving the position of each y in
    ascending order, so every element owns a distinct Fenwick slot.
    """
    n = y.shape[0]
    tw = np.zeros(n + 1)
    twy = np.zeros(n + 1)
    y_at = np.empty(n)
    w_at = np.empty(n)
    for i in range(n):
        y_at[rank[i]] = y[i]
        w_at[rank[i]] = w[i]
    top = 1
    while top * 2 <= n:
        top *= 2
    out = np.empty(n)
    tot_w = 0.0
    tot_wy = 0.0
    for k in range(n):
        j = rank[k] + 1
        wk = w[k]
        wyk = wk * y[k]
        while j <= n:
            tw[j] += wk
            twy[j] += wyk
            j += j & (-j)
        tot_w += wk
        tot_wy += wyk
        half = 0.5 * tot_w
        pos = 0
        acc_w = 0.0
        acc_wy = 0.0
        step = top
        while step > 0:
            nxt = pos + step
            if nxt <= n and acc_w + tw[nxt] < half:
                pos = nxt
                acc_w += tw[nxt]
                acc_wy += twy[nxt]
            step //= 2
        if pos >= n:
            pos = n - 1
        m = y_at[pos]
        below_w = acc_w + w_at[pos]
        below_wy = acc_wy + w_at[pos] * m
        out[k] = (m * below_w - below_wy) + ((tot_wy - below_wy) - m * (tot_w - below_w))
    return out


def prefix_abs_deviation(y, w) -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    rank = np.empty(len(y), dtype=np.int64)
    rank[np.argsort(y, kind="stable")] = np.arange(len(y))
    return _prefix_abs_deviation(y, w, rank)


def prefix_abs_deviation_naive(y, w) -> np.ndarray:
    """Quadratic reference for :func:`prefix_abs_deviation`."""
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.empty(len(y))
    for k in range(len(y)):
        m = weighted_lower_median(y[: k + 1], w[: k + 1])
        out[k] = np.sum(w[: k + 1] * np.abs(y[: k + 1] - m))
    return out


def _feature_decreases(x, y, w, criterion, min_leaf, parent_cost):
    """Impurity decrease (per unit weight) at every admissible cut of one feature.

    Returns ``(positions, decreases, xs)``: cut ``k`` puts the ``k`` smallest
    x values on the left.
    """
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    k = np.arange(min_leaf, n - min_leaf + 1)
    k = k[xs[k - 1] < xs[k]] if len(k) else k
    if len(k) == 0:
        return k, np.empty(0), xs
    ys, ws = y[order], w[order]
    W = ws.sum()
    if criterion == "squared":
        cw = np.cumsum(ws)
        cs = np.cumsum(ws * ys)
        wl, sl = cw[k - 1], cs[k - 1]
        wr, sr = W - wl, cs[-1] - sl
        # y is centred on the parent mean, so the parent term is ~0
        dec = (sl * sl / wl + sr * sr / wr - cs[-1] * cs[-1] / W) / W
    else:
        left = prefix_abs_deviation(ys, ws)
        right = prefix_abs_deviation(ys[::-1].copy(), ws[::-1].copy())[::-1]
        dec = (parent_cost - left[k - 1] - right[k]) / W
    return k, dec, xs


def best_split(X, y, sample_weights=None, config: TreeConfig = TreeConfig(), features=None):
    """Best (feature, threshold) by impurity decrease, or None.

    Impurity is weighted variance for the squared criterion and weighted mean
    absolute deviation from the lower median for the absolute one. Ties go
    to the lowest feature index, then the lowest threshold.
    """
    X, y, w = check_xy(X, y, sample_weights)
    n, d = X.shape
    min_leaf = config.min_samples_leaf
    if n < 2 * min_leaf or n < 2:
        return None
    W = w.sum()
    if W <= 0:
        return None
    if config.criterion == "squared":
        yc = y - np.sum(w * y) / W
        parent_cost = float(np.sum(w * yc * yc))
    else:
        yc = y - y[0]
        parent_cost = float(np.sum(w * np.abs(yc - weighted_lower_median(yc, w))))
    if parent_cost <= 0:
        return None
    tol = REL_TOL * parent_cost / W

    cand = range(d) if features is None else sorted(int(f) for f in features)
    per_feature = []
    best = -np.inf
    for f in cand:
        k, dec, xs = _feature_decreases(X[:, f], yc, w, config.criterion, min_leaf, parent_cost)
        if len(k):
            per_feature.append((f, k, dec, xs))
            best = max(best, float(dec.max()))
    if not per_feature or best <= tol:
        return None
    for f, k, dec, xs in per_feature:
        hit = np.flatnonzero(dec >= best - tol)
        if len(hit):
            j = hit[0]
            kk = k[j]
            threshold = 0.5 * (xs[kk - 1] + xs[kk])
            # midpoint can round up to the right value for adjacent floats
            if not threshold < xs[kk]:
                threshold = xs[kk - 1]
            return Split(f, float(threshold), float(dec[j]))
    return None


def fit_tree(X, y, sample_weights=None, config: TreeConfig = TreeConfig(),
             max_features: int | None = None, rng=None) -> Tree:
    """Grow a tree greedily, depth first, left child before right.

    With ``max_features`` set, each node scores a random subset of that many
    features drawn from ``rng`` (default: seeded from ``config.seed``).
    """
    X, y, w = check_xy(X, y, sample_weights)
    n, d = X.shape
    if n < 1:
        raise DimensionMismatch("cannot fit a tree on zero rows")
    if max_features is not None and max_features < d:
        rng = rng if rng is not None else np.random.default_rng(config.seed)
    else:
        max_features = None
    max_depth = config.max_depth if config.max_depth is not None else np.iinfo(np.int64).max
    b = _Builder()

    def grow(idx, depth):
        yi, wi = y[idx], w[idx]
        split = None
        if depth < max_depth and len(idx) >= 2 * config.min_samples_leaf:
            feats = None
            if max_features is not None:
                feats = np.sort(rng.choice(d, size=max_features, replace=False))
            split = best_split(X[idx], yi, wi, config, features=feats)
        if split is None:
            return b.leaf(leaf_value(yi, wi, config.criterion))
        node = b.internal(split.feature, split.threshold)
        go_left = X[idx, split.feature] <= split.threshold
        b.left[node] = grow(idx[go_left], depth + 1)
        b.right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(n), 0)
    return b.finish(d)


def predict_tree(tree: Tree, X) -> np.ndarray:
    X = check_xy(X)
    if X.shape[1] != tree.n_features:
        raise DimensionMismatch(f"tree expects {tree.n_features} features, got {X.shape[1]}")
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    active = tree.feature[node] >= 0
    while active.any():
        r, nd = rows[active], node[active]
        f = tree.feature[nd]
        go_left = X[r, f] <= tree.threshold[nd]
        node[r] = np.where(go_left, tree.left[nd], tree.right[nd])
        active = tree.feature[node] >= 0
    return tree.value[node].copy()
