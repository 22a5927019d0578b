"""Allan deviation computation and Gauss-Markov noise identification.

The identification fits the three-term analytic Allan model (white noise,
first-order Gauss-Markov bias with known correlation time, rate random
walk) to a measured overlapping Allan deviation curve by minimizing the
squared log residual with the package's Bayesian optimizer, followed by a
simplex polish.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .sensors import GmErrorParams


class TooShortError(ValueError):
    """Series too short for a meaningful Allan analysis."""


class FitFailedError(RuntimeError):
    """Allan model fit residual above threshold."""


def allan_deviation(series: np.ndarray, fs: float, n_tau: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Overlapping Allan deviation of a rate series.

    Returns (tau, adev) at logarithmically spaced cluster times from 2/fs
    up to a fifth of the record length.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 1000:
        raise TooShortError(f"need at least 1000 samples, got {n}")
    dt = 1.0 / fs
    theta = np.concatenate([[0.0], np.cumsum(x) * dt])
    m_max = n // 5
    ms = np.unique(np.round(np.logspace(np.log10(2), np.log10(m_max), n_tau)).astype(int))
    taus = ms * dt
    adev = np.empty(ms.size)
    for i, m in enumerate(ms):
        d = theta[2 * m :] - 2.0 * theta[m:-m] + theta[: -2 * m]
        adev[i] = np.sqrt(np.mean(d * d) / (2.0 * taus[i] ** 2))
    return taus, adev


def gm_allan_variance(tau: np.ndarray, B: float, corr_time: float) -> np.ndarray:
    """Allan variance of a first-order Gauss-Markov process.

    B is the stationary standard deviation, so the driving white noise has
    density 2 B^2 / corr_time.
    """
    if B == 0.0 or corr_time <= 0.0:
        return np.zeros_like(tau)
    r = tau / corr_time
    bracket = 1.0 - (1.0 / (2.0 * r)) * (3.0 - 4.0 * np.exp(-r) + np.exp(-2.0 * r))
    return 2.0 * B**2 * (corr_time / tau) * bracket


def analytic_allan(tau: np.ndarray, N: float, B: float, K: float, corr_time: float) -> np.ndarray:
    """Analytic Allan deviation of the three-term error model."""
    tau = np.asarray(tau, dtype=float)
    avar = N**2 / tau + gm_allan_variance(tau, B, corr_time) + K**2 * tau / 3.0
    return np.sqrt(avar)


def _log_residual(log10_params, taus, log_adev, corr_time, weights):
    N, B, K = 10.0 ** np.asarray(log10_params)
    model = analytic_allan(taus, N, B, K, corr_time)
    r = np.log(model) - log_adev
    return float(np.sum(weights * r * r) / np.sum(weights))


def fit_gm_params(
    taus: np.ndarray,
    adevs: np.ndarray,
    corr_time: float = 100.0,
    budget: int = 40,
    seed: int = 0,
    residual_threshold: float = 0.25,
) -> GmErrorParams:
    """Identify (N, B, K) from an Allan deviation curve.

    The curve must span at least two decades of tau. Components whose
    best-fit contribution is negligible over the whole curve are snapped
    to zero. Raises :class:`FitFailedError` if the mean squared log
    residual stays above ``residual_threshold``.
    """
    from .bayesopt import bo_minimize  # local import: bayesopt has no allan dependency

    taus = np.asarray(taus, dtype=float)
    adevs = np.asarray(adevs, dtype=float)
    if taus.size < 8 or taus.max() / taus.min() < 100.0:
        raise TooShortError("Allan curve must span at least two decades of tau")
    if np.all(adevs < 1e-300):
        return GmErrorParams(N=np.zeros(1), B=0.0, K=0.0, corr_time=corr_time)

    # data-driven parameter scales anchor the search box
    n0 = max(adevs[0] * np.sqrt(taus[0]), 1e-300)
    k0 = max(adevs[-1] * np.sqrt(3.0 / taus[-1]), 1e-300)
    b0 = max(adevs.min() / 0.437, 1e-300)
    centers = np.log10([n0, b0, k0])
    lo, hi = centers - 4.0, centers + 1.0
    log_adev = np.log(np.maximum(adevs, 1e-300))
    # large-tau estimates come from few clusters; weight accordingly
    weights = np.sqrt(taus.max() / taus)

    def obj_raw(x):
        return _log_residual(x, taus, log_adev, corr_time, weights)

    # global search in the optimizer's normalized box mapped onto the
    # data-anchored decades, then a simplex polish on the best point

    result = bo_minimize(
        lambda a: obj_raw(lo + (np.asarray(a) + 3.0) / 6.0 * (hi - lo)),
        dim=3,
        budget=budget,
        seed=seed,
    )
    x_best = lo + (np.asarray(result.best_x) + 3.0) / 6.0 * (hi - lo)
    polish = minimize(obj_raw, x_best, method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000})
    if polish.fun < obj_raw(x_best):
        x_best = polish.x
    residual = obj_raw(x_best)
    if residual > residual_threshold:
        raise FitFailedError(f"Allan fit residual {residual:.3g} above {residual_threshold}")

    N, B, K = 10.0**x_best
    # drop terms that never contribute more than 1% of the measured curve
    for idx, val in enumerate((N, B, K)):
        trial = [N, B, K]
        trial[idx] = 0.0
        alone = analytic_allan(taus, *trial, corr_time)
        if np.all(np.abs(alone - adevs) <= np.abs(analytic_allan(taus, N, B, K, corr_time) - adevs) + 0.01 * adevs):
            if idx == 0:
                N = 0.0
            elif idx == 1:
                B = 0.0
            else:
                K = 0.0
    return GmErrorParams(N=np.array([N]), B=B, K=K, corr_time=corr_time)
