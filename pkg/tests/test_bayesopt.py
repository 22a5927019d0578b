"""Constrained Bayesian optimizer tests on synthetic problems."""

import numpy as np
import pytest

from auvgnc.bayesopt import bo_minimize, mes_acquisition, sample_min_values
from auvgnc.gp import gp_fit

from synthetic_problems import (
    BOWL_OPTIMUM_J,
    DISK_RADIUS,
    constrained_bowl,
    crashing_bowl,
)


class TestAcquisition:
    def test_zero_at_zero_variance(self):
        mu = np.array([1.0])
        sd = np.array([1e-6])
        mins = np.array([0.5, 0.3])
        acq = mes_acquisition(mu, sd, mins)
        assert acq[0] < 1e-5

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(0)
        mu = rng.uniform(-2, 2, 200)
        sd = rng.uniform(1e-4, 2.0, 200)
        mins = np.array([-2.5, -1.0, 0.0])
        assert np.all(mes_acquisition(mu, sd, mins) >= -1e-12)

    def test_prefers_unexplored_region_on_1d_toy(self):
        # data on the right, function sloping down toward the unexplored
        # left: the acquisition must chase the predicted minimum out there
        X = np.linspace(0.0, 2.0, 8)[:, None]
        y = (X[:, 0] + 1.0) ** 2
        model = gp_fit(X, y, seed=0)
        rng = np.random.default_rng(42)
        grid = np.linspace(-3, 3, 300)[:, None]
        mins = sample_min_values(model, grid, 16, rng, float(y.min()))
        mu, var = model.predict(grid)
        acq = mes_acquisition(mu, np.sqrt(np.maximum(var, 1e-12)), mins)
        assert grid[int(np.argmax(acq)), 0] < 0.0


class TestBoMinimize:
    @pytest.mark.slow
    def test_constrained_bowl_10_of_10_seeds(self):
        for seed in range(10):
            res = bo_minimize(
                constrained_bowl, dim=2, budget=60, seed=seed, g_max=DISK_RADIUS
            )
            assert res.feasible
            assert res.best_g <= DISK_RADIUS + 1e-9
            assert res.best_J - BOWL_OPTIMUM_J <= 1e-2, f"seed {seed}: J={res.best_J}"

    def test_budget_one_returns_first_point(self):
        res = bo_minimize(lambda x: float(np.sum(x**2)), dim=2, budget=1, seed=3)
        assert res.n_evals == 1
        assert res.best_J is not None

    def test_budget_respected_exactly(self):
        calls = []

        def f(x):
            calls.append(x)
            return float(np.sum(x**2))

        res = bo_minimize(f, dim=3, budget=23, seed=1)
        assert len(calls) == 23
        assert res.n_evals == 23

    def test_deterministic_per_seed(self):
        r1 = bo_minimize(constrained_bowl, dim=2, budget=25, seed=7, g_max=DISK_RADIUS)
        r2 = bo_minimize(constrained_bowl, dim=2, budget=25, seed=7, g_max=DISK_RADIUS)
        np.testing.assert_array_equal(r1.best_x, r2.best_x)
        for a, b in zip(r1.history, r2.history):
            np.testing.assert_array_equal(a.x, b.x)

    def test_candidates_stay_in_box(self):
        res = bo_minimize(constrained_bowl, dim=2, budget=30, seed=2, g_max=DISK_RADIUS)
        for obs in res.history:
            assert np.all(obs.x >= -3.0 - 1e-12) and np.all(obs.x <= 3.0 + 1e-12)

    @pytest.mark.slow
    def test_crash_region_avoided_after_learning(self):
        res = bo_minimize(crashing_bowl, dim=2, budget=60, seed=11)
        deep = [o for i, o in enumerate(res.history) if i >= 30 and o.x[0] < -1.2]
        assert len(deep) <= 2, f"{len(deep)} samples deep in the crash region after eval 30"
        assert res.feasible
        assert res.best_J < 1.0

    def test_all_infeasible_reports_flagged_best(self):
        def f(x):
            return float(np.sum(x**2)), 10.0, False  # g always above threshold

        res = bo_minimize(f, dim=2, budget=15, seed=0, g_max=1.0)
        assert not res.feasible
        assert res.best_x is not None

    def test_x0_is_evaluated_first(self):
        seen = []

        def f(x):
            seen.append(x.copy())
            return float(np.sum(x**2))

        x0 = np.array([0.5, -0.5])
        bo_minimize(f, dim=2, budget=12, seed=0, x0=x0)
        np.testing.assert_allclose(seen[0], x0)

    def test_best_is_argmin_of_feasible_history(self):
        res = bo_minimize(constrained_bowl, dim=2, budget=30, seed=5, g_max=DISK_RADIUS)
        feas = [o for o in res.history if o.feasible(DISK_RADIUS)]
        assert res.best_J == min(o.J for o in feas)
