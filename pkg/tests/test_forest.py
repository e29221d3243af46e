import json

import numpy as np
import pytest

from emissions_ml.forest import (
    ForestConfig,
    ForestModel,
    bootstrap_indices,
    fit_forest,
    predict_forest,
    tree_rng,
)
from emissions_ml.tree import Tree, TreeConfig, fit_tree, predict_tree


@pytest.fixture
def data(rng):
    X = rng.uniform(0, 1, (250, 3))
    y = 10 * X[:, 0] + np.sin(6 * X[:, 1]) + rng.normal(0, 0.3, 250)
    return X, y


def test_single_tree_without_bootstrap_equals_fit_tree(data):
    X, y = data
    cfg = ForestConfig(n_estimators=1, bootstrap=False, tree=TreeConfig(max_depth=5, criterion="absolute"))
    f = fit_forest(X, y, cfg)
    t = fit_tree(X, y, None, cfg.tree)
    assert f.trees[0].structurally_equal(t)
    np.testing.assert_array_equal(predict_forest(f, X), predict_tree(t, X))


def test_same_seed_same_model(data):
    X, y = data
    cfg = ForestConfig(n_estimators=6, tree=TreeConfig(max_depth=4, criterion="absolute"), seed=5)
    a = json.dumps(fit_forest(X, y, cfg).to_dict())
    b = json.dumps(fit_forest(X, y, cfg).to_dict())
    assert a == b
    c = json.dumps(fit_forest(X, y, ForestConfig(n_estimators=6, tree=cfg.tree, seed=6)).to_dict())
    assert a != c


def test_threads_do_not_change_results(data):
    X, y = data
    cfg = ForestConfig(n_estimators=8, tree=TreeConfig(max_depth=5), max_features_fraction=0.67)
    a = fit_forest(X, y, cfg, n_jobs=1)
    b = fit_forest(X, y, cfg, n_jobs=4)
    assert all(s.structurally_equal(t) for s, t in zip(a.trees, b.trees))


def test_full_size_configuration_accepted(data):
    X, y = data
    cfg = ForestConfig(n_estimators=250, tree=TreeConfig(max_depth=9, criterion="absolute"))
    assert ForestConfig() == cfg
    m = fit_forest(X[:60], y[:60], cfg)
    assert len(m.trees) == 250
    assert all(t.depth() <= 9 for t in m.trees)


def stump(v, n_features=1):
    return Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.array([float(v)]), n_features)


def test_prediction_is_mean_of_trees():
    cfg = ForestConfig(n_estimators=2)
    m = ForestModel([stump(1.0), stump(3.0)], cfg, 1)
    assert predict_forest(m, np.zeros((1, 1)))[0] == 2.0
    m = ForestModel([stump(7.0)] * 250, cfg, 1)
    assert np.all(predict_forest(m, np.zeros((4, 1))) == 7.0)


def test_prediction_matches_member_mean(data):
    X, y = data
    m = fit_forest(X, y, ForestConfig(n_estimators=12, tree=TreeConfig(max_depth=6)))
    mean = np.mean([predict_tree(t, X) for t in m.trees], axis=0)
    np.testing.assert_allclose(predict_forest(m, X), mean, rtol=0, atol=1e-12)


def test_bootstrap_indices():
    for i in range(5):
        idx = bootstrap_indices(37, tree_rng(0, i))
        assert len(idx) == 37 and idx.min() >= 0 and idx.max() < 37
    assert not np.array_equal(bootstrap_indices(50, tree_rng(0, 0)), bootstrap_indices(50, tree_rng(0, 1)))


def test_forest_beats_average_tree_on_noise(rng):
    x = rng.uniform(0, 10, (400, 1))
    y = x[:, 0] + rng.normal(0, 1.0, 400)
    xt = rng.uniform(0, 10, (400, 1))
    yt = xt[:, 0] + rng.normal(0, 1.0, 400)
    m = fit_forest(x, y, ForestConfig(n_estimators=100, tree=TreeConfig(max_depth=None)))
    forest_mse = np.mean((predict_forest(m, xt) - yt) ** 2)
    tree_mse = np.mean([np.mean((predict_tree(t, xt) - yt) ** 2) for t in m.trees])
    assert forest_mse <= tree_mse + 1e-9


def test_serialization_round_trip(data):
    X, y = data
    m = fit_forest(X, y, ForestConfig(n_estimators=4, tree=TreeConfig(max_depth=5, criterion="absolute")))
    m2 = ForestModel.from_dict(json.loads(json.dumps(m.to_dict())))
    np.testing.assert_array_equal(m.predict(X), m2.predict(X))
    assert m2.config == m.config
