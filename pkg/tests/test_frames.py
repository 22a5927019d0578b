"""Quaternion/rotation kernel tests."""

import numpy as np
import pytest

from auvgnc import frames


RNG = np.random.default_rng(12345)


def random_quat(rng=RNG, n=None):
    shape = (4,) if n is None else (n, 4)
    return frames.quat_normalize(rng.standard_normal(shape))


class TestQuatToDcm:
    def test_identity(self):
        np.testing.assert_allclose(frames.quat_to_dcm([1, 0, 0, 0]), np.eye(3))

    def test_yaw_90_maps_body_x_to_ned_y(self):
        q = frames.euler_to_quat(0.0, 0.0, np.pi / 2)
        C = frames.quat_to_dcm(q)
        np.testing.assert_allclose(C @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_orthogonal_unit_det(self):
        for q in random_quat(n=50):
            C = frames.quat_to_dcm(q)
            np.testing.assert_allclose(C.T @ C, np.eye(3), atol=1e-12)
            assert abs(np.linalg.det(C) - 1.0) < 1e-12

    def test_matches_euler_built_rotation(self):
        # C(q(euler)) must equal the zyx rotation built directly from angles
        rng = np.random.default_rng(7)
        for _ in range(50):
            phi, theta, psi = rng.uniform(-np.pi, np.pi), rng.uniform(-1.4, 1.4), rng.uniform(-np.pi, np.pi)
            cph, sph = np.cos(phi), np.sin(phi)
            cth, sth = np.cos(theta), np.sin(theta)
            cps, sps = np.cos(psi), np.sin(psi)
            Rz = np.array([[cps, -sps, 0], [sps, cps, 0], [0, 0, 1]])
            Ry = np.array([[cth, 0, sth], [0, 1, 0], [-sth, 0, cth]])
            Rx = np.array([[1, 0, 0], [0, cph, -sph], [0, sph, cph]])
            C_direct = Rz @ Ry @ Rx
            C = frames.quat_to_dcm(frames.euler_to_quat(phi, theta, psi))
            np.testing.assert_allclose(C, C_direct, atol=1e-12)


class TestEulerQuat:
    def test_zero_angles_identity(self):
        np.testing.assert_allclose(frames.euler_to_quat(0, 0, 0), [1, 0, 0, 0])

    def test_yaw_pi(self):
        q = frames.euler_to_quat(0, 0, np.pi)
        np.testing.assert_allclose(np.abs(q), [0, 0, 0, 1], atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            angles = np.array(
                [rng.uniform(-np.pi, np.pi), rng.uniform(-1.45, 1.45), rng.uniform(-np.pi, np.pi)]
            )
            back = frames.quat_to_euler(frames.euler_to_quat(*angles))
            np.testing.assert_allclose(back, angles, atol=1e-9)

    def test_gimbal_lock_raises(self):
        q = frames.euler_to_quat(0.3, np.pi / 2 - 1e-9, 0.1)
        with pytest.raises(frames.GimbalLockError):
            frames.quat_to_euler(q)


class TestQuatKinematics:
    def test_zero_rate_zero_derivative(self):
        q = random_quat()
        np.testing.assert_allclose(frames.quat_kinematics_rhs(q, np.zeros(3)), np.zeros(4))

    def test_small_yaw_integration(self):
        w, dt = 0.3, 1e-5
        q = np.array([1.0, 0, 0, 0])
        qd = frames.quat_kinematics_rhs(q, np.array([0, 0, w]))
        q1 = frames.quat_normalize(q + dt * qd)
        yaw = frames.quat_to_euler(q1)[2]
        assert abs(yaw - w * dt) < 1e-12

    def test_derivative_tangent_to_sphere(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            q = random_quat(rng)
            omega = rng.standard_normal(3)
            qd = frames.quat_kinematics_rhs(q, omega)
            assert abs(np.dot(q, qd)) < 1e-12


class TestAngularRateTransform:
    def test_identity_unit_rate(self):
        T = frames.angular_rate_transform(np.array([1.0, 0, 0, 0]))
        np.testing.assert_allclose(T @ [0, 0, 1], [0, 0, 0, 0.5], atol=1e-15)

    def test_matches_kinematics_rhs(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            q = random_quat(rng)
            omega = rng.standard_normal(3)
            np.testing.assert_allclose(
                frames.angular_rate_transform(q) @ omega,
                frames.quat_kinematics_rhs(q, omega),
                atol=1e-12,
            )

    def test_column_norms(self):
        for q in random_quat(n=20):
            T = frames.angular_rate_transform(q)
            np.testing.assert_allclose(np.linalg.norm(T, axis=0), 0.5, atol=1e-12)


class TestWrapAngle:
    @pytest.mark.parametrize(
        "a,expected",
        [
            (np.pi + 0.1, -np.pi + 0.1),
            (-3 * np.pi, np.pi),
            (0.5, 0.5),
            (np.pi, np.pi),
            (-np.pi, np.pi),
        ],
    )
    def test_values(self, a, expected):
        assert abs(frames.wrap_angle(a) - expected) < 1e-12

    def test_idempotent_and_congruent(self):
        a = np.linspace(-20, 20, 801)
        w = frames.wrap_angle(a)
        assert np.all(w > -np.pi) and np.all(w <= np.pi)
        np.testing.assert_allclose(frames.wrap_angle(w), w, atol=1e-12)
        np.testing.assert_allclose(np.mod(w - a, 2 * np.pi), 0, atol=1e-9)


class TestQuatWeightedMean:
    def test_all_equal(self):
        q = random_quat()
        quats = np.tile(q, (5, 1))
        mean, ok = frames.quat_weighted_mean(quats, np.full(5, 0.2))
        assert ok
        np.testing.assert_allclose(np.abs(np.dot(mean, q)), 1.0, atol=1e-10)

    def test_symmetric_pair_about_identity(self):
        d = 0.2
        quats = np.stack(
            [frames.euler_to_quat(0, 0, d), frames.euler_to_quat(0, 0, -d)]
        )
        mean, ok = frames.quat_weighted_mean(quats, np.array([0.5, 0.5]))
        assert ok
        np.testing.assert_allclose(np.abs(mean[0]), 1.0, atol=1e-9)

    def test_small_cluster_matches_linear_average(self):
        rng = np.random.default_rng(42)
        q0 = random_quat(rng)
        quats = []
        for _ in range(7):
            dq = frames.rotvec_to_quat(1e-3 * rng.standard_normal(3))
            quats.append(frames.quat_multiply(dq, q0))
        quats = np.array(quats)
        w = rng.uniform(0.5, 1.5, size=7)
        w /= w.sum()
        mean, ok = frames.quat_weighted_mean(quats, w)
        assert ok
        lin = frames.quat_normalize(w @ quats)
        assert np.linalg.norm(frames.quat_canonical(mean) - frames.quat_canonical(lin)) < 1e-6

    def test_negative_zeroth_weight(self):
        # unscented mean weights can have w0 < 0 while summing to one
        rng = np.random.default_rng(5)
        q0 = random_quat(rng)
        quats = [q0] + [
            frames.quat_multiply(frames.rotvec_to_quat(0.01 * rng.standard_normal(3)), q0)
            for _ in range(6)
        ]
        w = np.array([-2.0] + [0.5] * 6)
        mean, ok = frames.quat_weighted_mean(np.array(quats), w)
        assert ok
        assert abs(np.linalg.norm(mean) - 1.0) < 1e-9


class TestRotvecChart:
    def test_round_trip(self):
        rng = np.random.default_rng(8)
        rv = rng.uniform(-2, 2, size=(100, 3))
        back = frames.quat_to_rotvec(frames.rotvec_to_quat(rv))
        np.testing.assert_allclose(back, rv, atol=1e-9)

    def test_normalization_preserved(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            q = frames.quat_multiply(random_quat(rng), random_quat(rng))
            assert abs(np.linalg.norm(q) - 1.0) < 1e-9
