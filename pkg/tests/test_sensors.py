"""Sensor emulator tests."""

import numpy as np
import pytest

from auvgnc import frames, sensors


def zero_imu(rng=None):
    rng = rng or np.random.default_rng(0)
    return sensors.ImuModel(sensors.GmErrorParams.zero(), sensors.GmErrorParams.zero(), rng)


class TestGmErrorStep:
    def test_all_zero_params(self):
        p = sensors.GmErrorParams.zero()
        state = (np.zeros(3), np.zeros(3))
        rng = np.random.default_rng(1)
        for _ in range(100):
            err, state = sensors.gm_error_step(state, p, 0.01, rng.standard_normal((3, 3)))
            np.testing.assert_array_equal(err, 0)

    def test_white_only_scaling(self):
        N = 0.02
        p = sensors.GmErrorParams(N=[N], B=0.0, K=0.0)
        rng = np.random.default_rng(2)
        dt = 0.01
        state = (np.zeros(1), np.zeros(1))
        vals = np.empty(100_000)
        noise = rng.standard_normal((100_000, 3, 1))
        for i in range(100_000):
            err, state = sensors.gm_error_step(state, p, dt, noise[i])
            vals[i] = err[0]
        target = N / np.sqrt(dt)
        assert abs(np.std(vals) - target) / target < 0.03

    def test_random_walk_variance_growth(self):
        K = 0.05
        p = sensors.GmErrorParams(N=[0.0], B=0.0, K=K)
        dt, n_steps, n_runs = 0.01, 500, 400
        rng = np.random.default_rng(3)
        finals = np.empty(n_runs)
        for r in range(n_runs):
            state = (np.zeros(1), np.zeros(1))
            for _ in range(n_steps):
                err, state = sensors.gm_error_step(state, p, dt, rng.standard_normal((3, 1)))
            finals[r] = err[0]
        target_var = n_steps * K**2 * dt
        assert abs(np.var(finals) - target_var) / target_var < 0.25

    def test_bias_stationary_std(self):
        B = 0.5
        p = sensors.GmErrorParams(N=[0.0], B=B, K=0.0, corr_time=2.0)
        rng = np.random.default_rng(4)
        gm = sensors.GmError(p, rng)
        vals = np.array([gm.step(0.01)[0] for _ in range(200_000)])
        assert abs(np.std(vals) - B) / B < 0.1


class TestImu:
    def test_at_rest_level(self):
        imu = zero_imu()
        s = imu.sample(np.zeros(3), np.array([1.0, 0, 0, 0]), np.zeros(3), 0.0, 0.01)
        np.testing.assert_allclose(s.f_ib_b, [0, 0, -9.81], atol=1e-12)
        np.testing.assert_allclose(s.omega_ib_b, 0, atol=1e-15)

    def test_rolled_90_gravity(self):
        imu = zero_imu()
        q = frames.euler_to_quat(np.pi / 2, 0, 0)
        s = imu.sample(np.zeros(3), q, np.zeros(3), 0.0, 0.01)
        np.testing.assert_allclose(s.f_ib_b, [0, -9.81, 0], atol=1e-9)

    def test_quantization_multiples(self):
        qstep = 0.005
        accel = sensors.GmErrorParams(N=np.zeros(3), B=0, K=0, quantization_step=qstep)
        imu = sensors.ImuModel(accel, sensors.GmErrorParams.zero(), np.random.default_rng(0))
        s = imu.sample(np.array([0.1234, -0.0567, 0.001]), np.array([1.0, 0, 0, 0]), np.zeros(3), 0.0, 0.01)
        ratio = s.f_ib_b / qstep
        np.testing.assert_allclose(ratio, np.round(ratio), atol=1e-9)

    def test_turn_on_bias_constant_within_episode(self):
        accel = sensors.GmErrorParams(N=np.zeros(3), B=0, K=0, turn_on_bias_std=0.01)
        imu = sensors.ImuModel(accel, sensors.GmErrorParams.zero(), np.random.default_rng(11))
        s1 = imu.sample(np.zeros(3), np.array([1.0, 0, 0, 0]), np.zeros(3), 0.0, 0.01)
        s2 = imu.sample(np.zeros(3), np.array([1.0, 0, 0, 0]), np.zeros(3), 0.01, 0.01)
        assert np.any(s1.f_ib_b != [0, 0, -9.81])
        np.testing.assert_array_equal(s1.f_ib_b, s2.f_ib_b)


class TestMag:
    FIELD = np.array([0.2, 0.0, 0.45])

    def mag(self, params=None, seed=0):
        return sensors.MagModel(self.FIELD, params or sensors.GmErrorParams.zero(), np.random.default_rng(seed))

    def test_identity_attitude(self):
        s = self.mag().sample(np.array([1.0, 0, 0, 0]), 0.0, 0.01)
        np.testing.assert_allclose(s.m_b, self.FIELD, atol=1e-15)

    def test_yaw_180_negates_horizontal(self):
        q = frames.euler_to_quat(0, 0, np.pi)
        s = self.mag().sample(q, 0.0, 0.01)
        np.testing.assert_allclose(s.m_b, [-0.2, 0.0, 0.45], atol=1e-12)

    def test_noise_mean_near_truth(self):
        p = sensors.GmErrorParams(N=np.full(3, 1e-3), B=0, K=0)
        m = self.mag(p, seed=5)
        sigma = 1e-3 / np.sqrt(0.01)
        samples = np.array([m.sample(np.array([1.0, 0, 0, 0]), i * 0.01, 0.01).m_b for i in range(10_000)])
        np.testing.assert_allclose(samples.mean(axis=0), self.FIELD, atol=3 * sigma / 100)


class TestDepth:
    def test_surface_pressure(self):
        d = sensors.DepthModel(np.random.default_rng(0), sigma=0.0, quantization_step=0.0)
        assert d.sample(0.0, 0.0).p_abs == 101325.0

    def test_ten_meters(self):
        d = sensors.DepthModel(np.random.default_rng(0), sigma=0.0, quantization_step=0.0)
        assert abs(d.sample(10.0, 0.0).p_abs - 199388.8) < 1e-9

    def test_saturation_at_full_scale(self):
        d = sensors.DepthModel(np.random.default_rng(0), sigma=0.0)
        assert d.sample(1000.0, 0.0).p_abs == 101325.0 + 500.0e4

    def test_quantization(self):
        d = sensors.DepthModel(np.random.default_rng(3), sigma=2500.0, quantization_step=50.0)
        p = d.sample(25.0, 0.0).p_abs
        assert abs(p / 50.0 - round(p / 50.0)) < 1e-9


class TestUsbl:
    def make(self, seed=0, outages=None, **kw):
        params = sensors.UsblParams(**kw)
        return sensors.UsblModel(params, np.random.default_rng(seed), outage_windows=outages)

    def test_zero_noise_recovery(self):
        u = self.make(sigma_rtt=0.0, sigma_tdoa=0.0)
        eta = np.array([100.0, 0.0, 10.0])
        q = frames.euler_to_quat(0.1, -0.05, 0.8)
        fix = u.fix(eta, q, 0.0)
        assert fix.valid
        err = np.linalg.norm(fix.eta_meas - eta)
        assert err < 0.005 * np.linalg.norm(eta)

    def test_outage_invalid(self):
        u = self.make(outages=[(10.0, 30.0)])
        fix = u.fix(np.array([50.0, 0, 10.0]), np.array([1.0, 0, 0, 0]), 15.0)
        assert not fix.valid and fix.eta_meas is None
        fix2 = u.fix(np.array([50.0, 0, 10.0]), np.array([1.0, 0, 0, 0]), 45.0)
        assert fix2.valid

    def test_accuracy_predicts_error_std(self):
        u = self.make(seed=7)
        eta = np.array([60.0, 25.0, 15.0])
        q = frames.euler_to_quat(0.0, 0.05, 1.2)
        errs = []
        acc = []
        for i in range(10_000):
            fix = u.fix(eta, q, float(i))
            errs.append(np.linalg.norm(fix.eta_meas - eta) ** 2)
            acc.append(fix.accuracy)
        empirical = np.sqrt(np.mean(errs))
        predicted = np.mean(acc)
        assert abs(empirical - predicted) / predicted < 0.25

    def test_error_grows_with_range(self):
        rows = []
        for r in (10.0, 50.0, 200.0):
            u = self.make(seed=int(r))
            eta = np.array([r, 0.0, 5.0])
            errs = [
                np.linalg.norm(u.fix(eta, np.array([1.0, 0, 0, 0]), float(i)).eta_meas - eta)
                for i in range(2000)
            ]
            rows.append(np.sqrt(np.mean(np.square(errs))))
        assert rows[0] < rows[1] < rows[2]

    def test_close_range_rejected(self):
        u = self.make()
        with pytest.raises(sensors.InvalidFixError):
            u.fix(np.array([0.1, 0.0, 0.2]), np.array([1.0, 0, 0, 0]), 0.0)

    def test_degenerate_array_rejected(self):
        # collinear hydrophones cannot resolve a 3-D direction
        positions = np.array([[0.1 * i, 0, 0] for i in range(5)])
        with pytest.raises(sensors.DegenerateGeometryError):
            sensors.UsblModel(
                sensors.UsblParams(hydrophone_positions=positions), np.random.default_rng(0)
            )

    def test_zero_noise_is_deterministic(self):
        u1 = self.make(seed=1, sigma_rtt=0.0, sigma_tdoa=0.0)
        u2 = self.make(seed=99, sigma_rtt=0.0, sigma_tdoa=0.0)
        eta = np.array([30.0, -20.0, 12.0])
        q = frames.euler_to_quat(0.05, 0.02, -2.0)
        f1, f2 = u1.fix(eta, q, 0.0), u2.fix(eta, q, 0.0)
        np.testing.assert_array_equal(f1.eta_meas, f2.eta_meas)
