"""Gaussian process regression tests against hand-computed linear algebra."""

import numpy as np

from auvgnc.gp import GpModel, gp_fit


def test_noise_free_interpolation():
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(12, 2))
    y = np.sin(X[:, 0]) + 0.5 * np.cos(X[:, 1])
    model = gp_fit(X, y, seed=1)
    mean, _ = model.predict(X)
    np.testing.assert_allclose(mean, y, atol=1e-6)


def test_three_point_closed_form():
    # direct GP formulas computed by hand-rolled linear algebra
    X = np.array([[0.0], [1.0], [2.5]])
    y = np.array([1.0, -0.5, 2.0])
    ls, sf2, sn2 = np.array([0.8]), 1.7, 0.01
    model = GpModel(X, y, ls, sf2, sn2, jitter=0.0)
    xs = np.array([[0.7], [1.9]])

    def k(a, b):
        return sf2 * np.exp(-0.5 * (a - b) ** 2 / ls[0] ** 2)

    K = np.array([[k(xi[0], xj[0]) for xj in X] for xi in X]) + sn2 * np.eye(3)
    ks = np.array([[k(xi[0], xj[0]) for xj in X] for xi in xs])
    ym = y.mean()
    mean_direct = ym + ks @ np.linalg.solve(K, y - ym)
    var_direct = sf2 - np.sum(ks * np.linalg.solve(K, ks.T).T, axis=1)
    mean, var = model.predict(xs)
    np.testing.assert_allclose(mean, mean_direct, atol=1e-10)
    np.testing.assert_allclose(var, var_direct, atol=1e-10)


def test_duplicated_training_point_survives():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [2.0, -1.0]])
    y = np.array([1.0, 1.0, 0.0, 2.0])
    model = gp_fit(X, y, seed=0)
    mean, var = model.predict(np.array([[0.5, 0.5]]))
    assert np.isfinite(mean).all() and np.isfinite(var).all()


def test_degenerate_identical_targets_fall_back():
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([3.0, 3.0, 3.0])
    model = gp_fit(X, y, seed=0)
    mean, var = model.predict(np.array([[5.0]]))
    np.testing.assert_allclose(mean, 3.0, atol=1e-9)
    assert var[0] >= 0.0


def test_posterior_variance_nonnegative_and_small_at_train():
    rng = np.random.default_rng(3)
    X = rng.uniform(-3, 3, size=(20, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + np.sin(X[:, 0])
    model = gp_fit(X, y, seed=2)
    _, var_train = model.predict(X)
    assert np.all(var_train >= 0.0)
    assert np.all(var_train <= 1e-4 * model.signal_var + 1e-8)
    _, var_far = model.predict(np.array([[50.0, 50.0, 50.0]]))
    assert var_far[0] > 0.5 * model.signal_var
