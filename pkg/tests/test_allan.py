"""Allan deviation and Gauss-Markov identification tests."""

import numpy as np
import pytest

from auvgnc import allan, sensors


def simulate_gm_series(params, n, dt, seed):
    gm = sensors.GmError(params, np.random.default_rng(seed))
    return np.array([gm.step(dt)[0] for _ in range(n)])


def loglog_slope(taus, adevs, lo, hi):
    m = (taus >= lo) & (taus <= hi) & (adevs > 0)
    return np.polyfit(np.log10(taus[m]), np.log10(adevs[m]), 1)[0]


class TestAllanDeviation:
    def test_white_noise_slope(self):
        rng = np.random.default_rng(0)
        fs = 100.0
        x = 0.3 * rng.standard_normal(200_000)
        taus, adevs = allan.allan_deviation(x, fs)
        slope = loglog_slope(taus, adevs, 0.05, 20.0)
        assert abs(slope + 0.5) < 0.05

    def test_white_noise_level(self):
        # adev(tau) = N / sqrt(tau) with N = sigma*sqrt(dt)
        rng = np.random.default_rng(1)
        fs, sigma = 100.0, 0.3
        x = sigma * rng.standard_normal(400_000)
        taus, adevs = allan.allan_deviation(x, fs)
        N = sigma * np.sqrt(1.0 / fs)
        i = np.argmin(np.abs(taus - 1.0))
        assert abs(adevs[i] - N / np.sqrt(taus[i])) / (N / np.sqrt(taus[i])) < 0.1

    def test_random_walk_slope(self):
        rng = np.random.default_rng(2)
        fs = 100.0
        x = np.cumsum(0.01 * rng.standard_normal(200_000))
        taus, adevs = allan.allan_deviation(x, fs)
        slope = loglog_slope(taus, adevs, 0.05, 20.0)
        assert abs(slope - 0.5) < 0.05

    def test_constant_series_zero(self):
        taus, adevs = allan.allan_deviation(np.full(5000, 3.7), 100.0)
        np.testing.assert_allclose(adevs, 0.0, atol=1e-12)

    def test_too_short_raises(self):
        with pytest.raises(allan.TooShortError):
            allan.allan_deviation(np.zeros(500), 100.0)


class TestAnalyticModel:
    def test_white_term(self):
        taus = np.logspace(-2, 2, 50)
        adev = allan.analytic_allan(taus, N=0.02, B=0.0, K=0.0, corr_time=100.0)
        np.testing.assert_allclose(adev, 0.02 / np.sqrt(taus))

    def test_rate_random_walk_term(self):
        taus = np.logspace(-2, 2, 50)
        adev = allan.analytic_allan(taus, N=0.0, B=0.0, K=0.05, corr_time=100.0)
        np.testing.assert_allclose(adev, 0.05 * np.sqrt(taus / 3.0))

    def test_gm_term_limits(self):
        # small tau: drive-density random walk 2 B^2 tau / (3 T);
        # large tau: white-like decay 2 B^2 T / tau
        B, T = 0.5, 10.0
        small = allan.gm_allan_variance(np.array([0.01]), B, T)[0]
        np.testing.assert_allclose(small, 2 * B**2 * 0.01 / (3 * T), rtol=1e-3)
        large = allan.gm_allan_variance(np.array([1e4]), B, T)[0]
        np.testing.assert_allclose(large, 2 * B**2 * T / 1e4, rtol=1e-2)

    def test_gm_term_matches_simulation(self):
        B, T, fs = 0.2, 5.0, 100.0
        p = sensors.GmErrorParams(N=[0.0], B=B, K=0.0, corr_time=T)
        x = simulate_gm_series(p, 400_000, 1.0 / fs, seed=3)
        taus, adevs = allan.allan_deviation(x, fs)
        model = np.sqrt(allan.gm_allan_variance(taus, B, T))
        m = (taus > 0.1) & (taus < 100.0)
        np.testing.assert_allclose(adevs[m], model[m], rtol=0.25)


class TestFitGmParams:
    def test_single_term_white_within_5pct(self):
        N_true = 0.015
        taus = np.logspace(-1.7, 1.7, 40)
        adevs = allan.analytic_allan(taus, N=N_true, B=0.0, K=0.0, corr_time=100.0)
        fit = allan.fit_gm_params(taus, adevs, corr_time=100.0, seed=0)
        assert abs(fit.N[0] - N_true) / N_true < 0.05

    def test_three_term_round_trip_within_20pct(self):
        N, B, K, T = 0.01, 0.004, 0.002, 20.0
        taus = np.logspace(-1.7, 2.3, 50)
        adevs = allan.analytic_allan(taus, N=N, B=B, K=K, corr_time=T)
        fit = allan.fit_gm_params(taus, adevs, corr_time=T, seed=1)
        assert abs(fit.N[0] - N) / N < 0.20
        assert abs(fit.B[0] - B) / B < 0.20
        assert abs(fit.K[0] - K) / K < 0.20

    def test_simulated_round_trip_within_20pct(self):
        # full pipeline: simulate -> Allan -> fit, with the three error
        # components well separated along the tau axis (identifiability)
        N, B, K, T = 0.01, 0.006, 0.001, 5.0
        fs = 100.0
        p = sensors.GmErrorParams(N=[N], B=B, K=K, corr_time=T)
        x = simulate_gm_series(p, 600_000, 1.0 / fs, seed=7)
        taus, adevs = allan.allan_deviation(x, fs)
        fit = allan.fit_gm_params(taus, adevs, corr_time=T, seed=2)
        assert abs(fit.N[0] - N) / N < 0.20
        assert abs(fit.B[0] - B) / B < 0.20
        assert abs(fit.K[0] - K) / K < 0.20

    def test_flat_zero_curve_gives_zero_params(self):
        taus = np.logspace(-2, 2, 30)
        fit = allan.fit_gm_params(taus, np.zeros(30), corr_time=100.0)
        assert fit.N[0] == 0.0 and fit.B[0] == 0.0 and fit.K[0] == 0.0

    def test_narrow_curve_rejected(self):
        taus = np.logspace(0, 1, 20)  # a single decade
        adevs = allan.analytic_allan(taus, 0.01, 0, 0, 100.0)
        with pytest.raises(allan.TooShortError):
            allan.fit_gm_params(taus, adevs)
