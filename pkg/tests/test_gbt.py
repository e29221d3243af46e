import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emissions_ml.errors import ConfigError, DimensionMismatch, EmptySpace
from emissions_ml.gbt import (
    GbtConfig,
    GbtModel,
    IntRange,
    LogUniform,
    default_search_space,
    fit_gbt,
    grad_hess_squared,
    leaf_weight_and_gain,
    predict_gbt,
    random_search,
)
from emissions_ml.tree import Tree

TWO_X = np.array([[0.0], [1.0]])
TWO_Y = np.array([0.0, 10.0])


def test_grad_hess_examples():
    g, h = grad_hess_squared([1.0, 2.0], [1.0, 2.0])
    assert g.tolist() == [0.0, 0.0] and h.tolist() == [1.0, 1.0]
    assert grad_hess_squared([5.0], [10.0])[0][0] == -5.0
    assert grad_hess_squared([0.0], [-3.0])[0][0] == 3.0
    with pytest.raises(DimensionMismatch):
        grad_hess_squared([1.0], [1.0, 2.0])


def test_leaf_weight_and_gain_examples():
    w, _, _, _ = leaf_weight_and_gain(-4.0, 2.0, 0.0, 0.0, GbtConfig(reg_lambda=1.0))
    assert w == pytest.approx(4 / 3, abs=1e-15)
    _, _, gain, ok = leaf_weight_and_gain(0.0, 3.0, 0.0, 3.0, GbtConfig(gamma=0.5))
    assert gain == -0.5 and not ok
    _, _, gain, ok = leaf_weight_and_gain(-5.0, 1.0, 5.0, 1.0, GbtConfig(reg_lambda=0.0, gamma=0.0))
    assert gain == 25.0 and ok
    _, _, _, ok = leaf_weight_and_gain(-5.0, 1.0, 5.0, 1.0, GbtConfig(reg_lambda=0.0, min_child_weight=2.0))
    assert not ok


@given(st.floats(-50, 50), st.floats(0.1, 20), st.floats(-50, 50), st.floats(0.1, 20), st.floats(0, 5))
def test_leaf_formulas_match_grid_minimisation(GL, HL, GR, HR, lam):
    grid = np.linspace(-600, 600, 1_200_001)  # step 1e-3

    def best(G, H):
        obj = G * grid + 0.5 * (H + lam) * grid**2
        i = int(np.argmin(obj))
        return grid[i], obj[i]

    cfg = GbtConfig(reg_lambda=lam, gamma=0.0)
    wl, wr, gain, _ = leaf_weight_and_gain(GL, HL, GR, HR, cfg)
    (gwl, ol), (gwr, orr), (_, op) = best(GL, HL), best(GR, HR), best(GL + GR, HL + HR)
    assert abs(wl - gwl) <= 1e-3 and abs(wr - gwr) <= 1e-3
    # objective error at a grid point is at most (H+lam) * step^2 / 2 per leaf
    slack = 0.5 * (HL + HR + HL + HR + 3 * lam) * 1e-6 + 1e-9
    assert abs(gain - (op - ol - orr)) <= slack


def test_two_point_example():
    m = fit_gbt(TWO_X, TWO_Y, GbtConfig(n_estimators=1, learning_rate=0.05, max_depth=1, reg_lambda=1.0))
    assert m.base_score == 5.0
    np.testing.assert_array_equal(m.trees[0].value[m.trees[0].feature < 0], [-2.5, 2.5])
    pred = predict_gbt(m, TWO_X)
    assert abs(pred[1] - 5.125) <= 1e-12 and abs(pred[0] - 4.875) <= 1e-12


def test_zero_rounds_predicts_mean():
    m = fit_gbt(TWO_X, TWO_Y, GbtConfig(n_estimators=0))
    np.testing.assert_array_equal(predict_gbt(m, np.array([[3.0], [-1.0]])), [5.0, 5.0])


def test_predict_examples():
    leaf = Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.array([2.0]), 1)
    m = GbtModel(1.0, [leaf], GbtConfig(learning_rate=0.5), 1)
    assert predict_gbt(m, np.zeros((1, 1)))[0] == 2.0
    assert predict_gbt(GbtModel(3.5, [], GbtConfig(), 1), np.zeros((2, 1))).tolist() == [3.5, 3.5]


def test_objective_alias_and_full_config():
    cfg = GbtConfig(n_estimators=1000, learning_rate=0.05, objective="reg:linear")
    assert cfg.objective == "squared_error"
    assert GbtConfig() == cfg
    with pytest.raises(ConfigError):
        GbtConfig(objective="reg:gamma")
    with pytest.raises(ConfigError):
        GbtConfig(learning_rate=0.0)


def synthetic(rng, n=500):
    X = rng.uniform(0, 1, (n, 4))
    y = 20 * X[:, 0] + 5 * np.sin(8 * X[:, 1]) + 3 * X[:, 2] * X[:, 3] + rng.normal(0, 0.5, n)
    return X, y


def test_training_mse_non_increasing(rng):
    X, y = synthetic(rng)
    mses = []
    fit_gbt(X, y, GbtConfig(n_estimators=50, learning_rate=0.3, gamma=0.0),
            callback=lambda r, p: mses.append(np.mean((p - y) ** 2)))
    start = np.mean((y - y.mean()) ** 2)
    seq = [start] + mses
    assert all(b <= a + 1e-9 for a, b in zip(seq, seq[1:]))


def test_one_round_interpolates_with_unit_rate(rng):
    X = rng.normal(size=(120, 3))
    y = rng.normal(size=120)
    cfg = GbtConfig(n_estimators=1, learning_rate=1.0, reg_lambda=0.0, max_depth=10_000, min_child_weight=1.0)
    m = fit_gbt(X, y, cfg)
    np.testing.assert_allclose(predict_gbt(m, X), y, atol=1e-9)


def test_predict_matches_running_prediction(rng):
    X, y = synthetic(rng, 200)
    m = fit_gbt(X, y, GbtConfig(n_estimators=30, learning_rate=0.1, max_depth=4))
    np.testing.assert_allclose(predict_gbt(m, X), m.train_prediction_, atol=1e-9)


def test_serialization_round_trip(rng):
    X, y = synthetic(rng, 200)
    m = fit_gbt(X, y, GbtConfig(n_estimators=10, max_depth=3))
    m2 = GbtModel.from_dict(json.loads(json.dumps(m.to_dict())))
    np.testing.assert_array_equal(m.predict(X), m2.predict(X))


def test_random_search(rng):
    X, y = synthetic(rng, 160)
    train, valid = (X[:120], y[:120]), (X[120:], y[120:])
    base = GbtConfig(n_estimators=5)
    best, rows = random_search({"max_depth": IntRange(1, 4)}, 1, train, valid, seed=1, base=base)
    assert len(rows) == 1 and best.max_depth == rows[0]["max_depth"]

    reference = {"n_estimators": [1000], "learning_rate": [0.05], "objective": ["reg:linear"]}
    small = {"n_estimators": [20], "learning_rate": [0.05], "objective": ["reg:linear"]}
    best, _ = random_search(small, 2, train, valid, seed=0)
    assert (best.n_estimators, best.learning_rate, best.objective) == (20, 0.05, "squared_error")
    assert set(reference) == set(small)

    space = {"n_estimators": IntRange(5, 15), "learning_rate": LogUniform(0.01, 0.3), "max_depth": [2, 3]}
    a = random_search(space, 4, train, valid, seed=3)
    b = random_search(space, 4, train, valid, seed=3)
    assert a[1] == b[1] and a[0] == b[0]
    assert a[0].n_estimators == min(a[1], key=lambda r: r["mae"])["n_estimators"]
    with pytest.raises(EmptySpace):
        random_search({}, 1, train, valid)
    with pytest.raises(EmptySpace):
        random_search({"max_depth": []}, 1, train, valid)
    assert set(default_search_space()) == {"n_estimators", "learning_rate", "max_depth"}
