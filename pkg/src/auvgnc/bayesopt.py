"""Constrained Bayesian optimization with max-value entropy search.

The objective is modeled by a GP; crash-constrained evaluations (no
objective value at all) enter the objective model as virtual data points
at a pessimistic level and additionally train a probit crash surrogate.
A smooth inequality constraint gets its own regression GP. The
acquisition is the entropy reduction about the constrained minimum value
(approximated with Gumbel min-value samples), weighted by the probability
of feasibility, maximized over random candidates plus local refinement.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, ndtr

from .gp import GpModel, gp_fit
from .opt_base import Observation, OptResult, latin_hypercube, normalize_outcome, pick_best

_GUMBEL_C25 = np.log(np.log(1.0 / 0.75))
_GUMBEL_C50 = np.log(np.log(2.0))
_GUMBEL_C75 = np.log(np.log(4.0))


def sample_min_values(
    model: GpModel,
    grid: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    y_best: float,
) -> np.ndarray:
    """Gumbel approximation of the posterior distribution of the minimum.

    Quantiles of P(min f >= y) over the grid fix the Gumbel location and
    scale; samples are clipped below the incumbent so the truncated
    entropy term stays on the exploit side.
    """
    mu, var = model.predict(grid)
    sd = np.sqrt(np.maximum(var, 1e-12))
    lo = float(np.min(mu - 6.0 * sd))
    hi = float(np.min(mu))

    def p_min_above(y):
        return np.exp(np.sum(log_ndtr((mu - y) / sd)))

    def quantile(p):
        # smallest y with P(min >= y) <= 1-p  (CDF of the min equal to p)
        a, b = lo, hi
        for _ in range(60):
            m = 0.5 * (a + b)
            if p_min_above(m) > 1.0 - p:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    y25, y50, y75 = quantile(0.25), quantile(0.5), quantile(0.75)
    scale = max((y75 - y25) / (_GUMBEL_C75 - _GUMBEL_C25), 1e-12)
    loc = y50 - scale * _GUMBEL_C50
    u = rng.uniform(1e-12, 1.0 - 1e-12, size=n_samples)
    samples = loc + scale * np.log(np.log(1.0 / (1.0 - u)))
    return np.minimum(samples, y_best - 1e-8 * max(1.0, abs(y_best)))


def mes_acquisition(mu: np.ndarray, sd: np.ndarray, min_samples: np.ndarray) -> np.ndarray:
    """Average truncated-entropy reduction over sampled minimum values."""
    gamma = (mu[:, None] - min_samples[None, :]) / sd[:, None]
    log_cdf = log_ndtr(gamma)
    log_pdf = -0.5 * gamma**2 - 0.5 * np.log(2 * np.pi)
    ratio = np.exp(log_pdf - log_cdf)
    vals = 0.5 * gamma * ratio - log_cdf
    return np.mean(vals, axis=1)


class _Surrogates:
    """The three models backing one acquisition evaluation."""

    def __init__(self, objective, constraint, crash, g_max):
        self.objective = objective
        self.constraint = constraint
        self.crash = crash
        self.g_max = g_max

    def acquisition(self, X: np.ndarray, min_samples: np.ndarray) -> np.ndarray:
        mu, var = self.objective.predict(X)
        sd = np.sqrt(np.maximum(var, 1e-12))
        acq = mes_acquisition(mu, sd, min_samples)
        if self.constraint is not None:
            mu_g, var_g = self.constraint.predict(X)
            acq = acq * ndtr((self.g_max - mu_g) / np.sqrt(np.maximum(var_g, 1e-12)))
        if self.crash is not None:
            mu_l, var_l = self.crash.predict(X)
            acq = acq * ndtr(mu_l / np.sqrt(1.0 + var_l))
        return acq


def _build(X, y, seed, cache, key, refit):
    """Fit or rebuild a GP, reusing cached hyperparameters between refits."""
    if refit or key not in cache:
        model = gp_fit(X, y, seed=seed)
        cache[key] = (model.lengthscales, model.signal_var, model.noise_var)
        return model
    ls, sf2, sn2 = cache[key]
    try:
        return GpModel(X, y, ls, sf2, sn2)
    except np.linalg.LinAlgError:
        model = gp_fit(X, y, seed=seed)
        cache[key] = (model.lengthscales, model.signal_var, model.noise_var)
        return model


def _fit_surrogates(history, g_max, seed, cache, refit):
    """Objective GP (with virtual crash points), constraint GP, crash GP."""
    X_all = np.array([o.x for o in history])
    ok = [o for o in history if o.J is not None]
    X_ok = np.array([o.x for o in ok])
    J_ok = np.array([o.J for o in ok])
    crashed_any = any(o.crashed for o in history)
    if crashed_any:
        virtual = float(np.max(J_ok) + 3.0 * max(np.std(J_ok), 1e-9))
        X_obj = np.vstack([X_ok] + [o.x[None, :] for o in history if o.crashed])
        J_obj = np.concatenate([J_ok, [virtual] * sum(o.crashed for o in history)])
    else:
        X_obj, J_obj = X_ok, J_ok
    objective = _build(X_obj, J_obj, seed, cache, "J", refit)
    constraint = None
    if g_max is not None:
        g_vals = [(o.x, o.g) for o in ok if o.g is not None]
        if len(g_vals) >= 2:
            Xg = np.array([x for x, _ in g_vals])
            gv = np.array([g for _, g in g_vals])
            constraint = _build(Xg, gv, seed + 1, cache, "g", refit)
    crash = None
    if crashed_any:
        labels = np.array([-1.0 if o.crashed else 1.0 for o in history])
        crash = _build(X_all, labels, seed + 2, cache, "l", refit)
    return _Surrogates(objective, constraint, crash, g_max)


def bo_minimize(
    func,
    dim: int,
    budget: int,
    seed: int = 0,
    lower=-3.0,
    upper=3.0,
    g_max: float | None = None,
    init_design_size: int = 10,
    x0: np.ndarray | None = None,
    n_candidates: int = 1000,
    n_min_samples: int = 16,
    refine_steps: int = 40,
) -> OptResult:
    """Budgeted constrained BO; returns the best feasible point found.

    ``func`` may return a float, a (J, g, crashed) tuple, or any object
    with those attributes; crashes are data, not errors. When ``x0`` is
    given it is evaluated first as part of the initial design.
    """
    rng = np.random.default_rng(seed)
    lower = np.broadcast_to(np.asarray(lower, float), (dim,)).copy()
    upper = np.broadcast_to(np.asarray(upper, float), (dim,)).copy()
    history: list[Observation] = []

    def evaluate(x):
        x = np.clip(x, lower, upper)
        J, g, crashed = normalize_outcome(func(x))
        history.append(Observation(x.copy(), J, g, crashed))

    init_pts = []
    if x0 is not None:
        init_pts.append(np.asarray(x0, float))
    n_lhs = min(max(init_design_size - len(init_pts), 0), budget - len(init_pts))
    if n_lhs > 0:
        init_pts.extend(latin_hypercube(n_lhs, dim, rng, lower, upper))
    for x in init_pts[:budget]:
        evaluate(x)

    hyper_cache: dict = {}
    while len(history) < budget:
        ok = [o for o in history if o.J is not None]
        if len(ok) < 2:
            evaluate(rng.uniform(lower, upper, dim))
            continue
        fit_seed = seed + 1000  # fixed: model fits stay deterministic per run
        # full hyperparameter refits taper off once the model has settled
        refit = len(history) <= 20 or len(history) % 5 == 0
        models = _fit_surrogates(history, g_max, fit_seed, hyper_cache, refit)
        feas = [o for o in ok if o.feasible(g_max)]
        y_best = min((o.J for o in feas), default=min(o.J for o in ok))

        cand = rng.uniform(lower, upper, size=(n_candidates, dim))
        # exploitation cloud around the incumbent sharpens the final answer
        if feas:
            inc = min(feas, key=lambda o: o.J).x
            local = inc[None, :] + rng.normal(0, 0.05 * (upper - lower), size=(50, dim))
            cand = np.vstack([cand, np.clip(local, lower, upper)])
        min_samples = sample_min_values(models.objective, cand, n_min_samples, rng, y_best)
        acq = models.acquisition(cand, min_samples)
        x_sel = cand[int(np.argmax(acq))]
        # local refinement: shrinking random perturbations
        best_a = np.max(acq)
        sigma = 0.1 * (upper - lower)
        for _ in range(refine_steps):
            trial = np.clip(x_sel + rng.normal(0, 1, dim) * sigma, lower, upper)
            a = models.acquisition(trial[None, :], min_samples)[0]
            if a > best_a:
                best_a, x_sel = a, trial
            else:
                sigma *= 0.9
        evaluate(x_sel)

    return pick_best(history, g_max)
