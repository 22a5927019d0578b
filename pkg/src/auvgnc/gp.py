"""Gaussian process regression with a squared-exponential ARD kernel.

Hyperparameters (per-dimension lengthscales, signal and noise variances)
are set by maximizing the log marginal likelihood with multi-start
gradient ascent; a small jitter keeps the Gram matrix factorizable.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize


def _sqdist(Xa: np.ndarray, Xb: np.ndarray, ls: np.ndarray) -> np.ndarray:
    """Pairwise squared distance with per-dimension scaling."""
    A = Xa / ls
    B = Xb / ls
    return np.maximum(
        np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T, 0.0
    )


class GpModel:
    """GP posterior with fixed hyperparameters and cached Cholesky factor."""

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        lengthscales: np.ndarray,
        signal_var: float,
        noise_var: float,
        jitter: float = 1e-8,
    ):
        self.X = np.atleast_2d(np.asarray(X, float))
        self.y = np.asarray(y, float).ravel()
        self.lengthscales = np.broadcast_to(
            np.asarray(lengthscales, float), (self.X.shape[1],)
        ).copy()
        self.signal_var = float(signal_var)
        self.noise_var = float(noise_var)
        self.jitter = jitter
        self.y_mean = float(np.mean(self.y))
        n = self.X.shape[0]
        K = self.signal_var * np.exp(-0.5 * _sqdist(self.X, self.X, self.lengthscales))
        K[np.diag_indices(n)] += self.noise_var + jitter * max(self.signal_var, 1.0)
        self.L = np.linalg.cholesky(K)
        r = self.y - self.y_mean
        self.alpha = np.linalg.solve(self.L.T, np.linalg.solve(self.L, r))

    def predict(self, Xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and (nonnegative) latent variance at Xs."""
        Xs = np.atleast_2d(np.asarray(Xs, float))
        ks = self.signal_var * np.exp(-0.5 * _sqdist(self.X, Xs, self.lengthscales))
        mean = self.y_mean + ks.T @ self.alpha
        v = np.linalg.solve(self.L, ks)
        var = np.maximum(self.signal_var - np.sum(v * v, axis=0), 0.0)
        return mean, var

    def log_marginal_likelihood(self) -> float:
        r = self.y - self.y_mean
        n = r.size
        return float(
            -0.5 * r @ self.alpha - np.sum(np.log(np.diag(self.L))) - 0.5 * n * np.log(2 * np.pi)
        )


def _neg_lml_and_grad(theta, X, r, jitter):
    """Negative log marginal likelihood and gradient in log-parameters."""
    d = X.shape[1]
    ls = np.exp(theta[:d])
    sf2 = np.exp(2.0 * theta[d])
    sn2 = np.exp(2.0 * theta[d + 1])
    n = X.shape[0]
    D2 = _sqdist(X, X, ls)
    R = np.exp(-0.5 * D2)
    K = sf2 * R
    K[np.diag_indices(n)] += sn2 + jitter * max(sf2, 1.0)
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return 1e10, np.zeros_like(theta)
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, r))
    lml = -0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2 * np.pi)
    Kinv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(n)))
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty_like(theta)
    for j in range(d):
        diff = (X[:, j : j + 1] - X[:, j : j + 1].T) / ls[j]
        dK = sf2 * R * (diff * diff)
        grad[j] = 0.5 * np.sum(W * dK)
    grad[d] = 0.5 * np.sum(W * (2.0 * sf2 * R))
    grad[d + 1] = 0.5 * np.trace(W) * 2.0 * sn2
    return -lml, -grad


def gp_fit(
    X: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    n_restarts: int = 2,
    jitter: float = 1e-8,
    noise_floor: float = 1e-10,
) -> GpModel:
    """Maximum-likelihood GP fit with restarts; needs >= 2 points.

    Identical targets degenerate to a near-flat prior fall-back rather
    than erroring out, so callers can fit blindly on small datasets.
    """
    X = np.atleast_2d(np.asarray(X, float))
    y = np.asarray(y, float).ravel()
    if X.shape[0] < 2:
        raise ValueError("need at least 2 points to fit a GP")
    d = X.shape[1]
    span = np.maximum(X.max(axis=0) - X.min(axis=0), 1e-3)
    y_std = float(np.std(y))
    if y_std < 1e-12:
        return GpModel(X, y, span, 1e-12, 1e-12, jitter)
    r = (y - np.mean(y)) / y_std

    bounds = (
        [(np.log(0.05 * s), np.log(50.0 * s)) for s in span]
        + [(np.log(1e-2), np.log(1e2))]
        + [(0.5 * np.log(noise_floor), 0.5 * np.log(4.0))]
    )
    rng = np.random.default_rng(seed)
    starts = [np.concatenate([np.log(span / 3.0), [0.0], [0.5 * np.log(1e-6)]])]
    for _ in range(n_restarts):
        starts.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))
    best = None
    for s0 in starts:
        res = minimize(
            _neg_lml_and_grad,
            s0,
            args=(X, r, jitter),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": 60},
        )
        if best is None or res.fun < best.fun:
            best = res
    theta = best.x
    ls = np.exp(theta[:d])
    sf2 = np.exp(2.0 * theta[d]) * y_std**2
    sn2 = np.exp(2.0 * theta[d + 1]) * y_std**2
    return GpModel(X, y, ls, sf2, sn2, jitter)
