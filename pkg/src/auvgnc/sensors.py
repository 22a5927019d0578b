"""Stochastic sensor emulators fed by ground truth.

Each sensor combines a deterministic map of the true state with a
first-order Gauss-Markov error stack (white noise + correlated bias +
random walk), a turn-on bias drawn once per episode, and quantization.
With all noise parameters zeroed every output is an exact deterministic
function of the truth.

Rates: IMU and magnetometer 100 Hz, depth 2 Hz, USBL 1 Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import quat_to_dcm
from .plant import GRAVITY

GRAVITY_NED = np.array([0.0, 0.0, GRAVITY])

DEPTH_KP = 9806.38  # Pa per meter of water
DEPTH_P0 = 101325.0  # Pa atmospheric
DEPTH_FULL_SCALE = 500.0e4  # Pa (500 dbar operating range)


class DegenerateGeometryError(ValueError):
    """Hydrophone array gives an ill-conditioned direction solve."""


class InvalidFixError(RuntimeError):
    """USBL fix requested/used during an outage window."""


@dataclass
class GmErrorParams:
    """First-order Gauss-Markov error model parameters, per axis.

    N: white noise density (unit/sqrt(s)); B: stationary std of the
    correlated bias (unit); K: random-walk density (unit*sqrt(s));
    corr_time: bias correlation time (s).
    """

    N: np.ndarray
    B: np.ndarray
    K: np.ndarray
    corr_time: float = 100.0
    turn_on_bias_std: np.ndarray = None
    quantization_step: float = 0.0

    def __post_init__(self):
        self.N = np.atleast_1d(np.asarray(self.N, dtype=float))
        self.B = np.broadcast_to(np.asarray(self.B, float), self.N.shape).copy()
        self.K = np.broadcast_to(np.asarray(self.K, float), self.N.shape).copy()
        if self.turn_on_bias_std is None:
            self.turn_on_bias_std = np.zeros_like(self.N)
        self.turn_on_bias_std = np.broadcast_to(
            np.asarray(self.turn_on_bias_std, float), self.N.shape
        ).copy()
        for name in ("N", "B", "K", "turn_on_bias_std"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} must be nonnegative")

    @staticmethod
    def zero(axes: int = 3) -> "GmErrorParams":
        return GmErrorParams(N=np.zeros(axes), B=0.0, K=0.0)


def gm_error_step(
    state: tuple[np.ndarray, np.ndarray],
    params: GmErrorParams,
    dt: float,
    noise: np.ndarray,
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Advance the Gauss-Markov stack one step and return the total error.

    ``state`` is ``(z_b, z_k)``; ``noise`` has shape (3, axes) holding the
    standard-normal draws for the white, bias and random-walk terms.
    """
    z_b, z_k = state
    z_n = params.N / np.sqrt(dt) * noise[0]
    if params.corr_time > 0:
        drive = params.B * np.sqrt(2.0 / params.corr_time)
        z_b = z_b + dt * (-z_b / params.corr_time) + np.sqrt(dt) * drive * noise[1]
    z_k = z_k + params.K * np.sqrt(dt) * noise[2]
    return z_n + z_b + z_k, (z_b, z_k)


def quantize(x: np.ndarray, step: float) -> np.ndarray:
    """Round to the nearest quantization step; step 0 disables."""
    if step <= 0:
        return x
    return np.round(x / step) * step


class GmError:
    """Stateful Gauss-Markov error generator for one sensor triad."""

    def __init__(self, params: GmErrorParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng
        n = params.N.shape[0]
        # bias starts at its stationary distribution so the error is wide-
        # sense stationary from the first sample
        z_b0 = params.B * rng.standard_normal(n) if params.corr_time > 0 else np.zeros(n)
        self.z_b = z_b0
        self.z_k = np.zeros(n)

    def step(self, dt: float) -> np.ndarray:
        from ._kernels import gm_step3

        noise = self.rng.standard_normal((3, self.params.N.shape[0]))
        p = self.params
        return gm_step3(self.z_b, self.z_k, p.N, p.B, p.K, p.corr_time, dt, noise)


@dataclass
class ImuSample:
    f_ib_b: np.ndarray  # specific force, m/s^2
    omega_ib_b: np.ndarray  # angular rate, rad/s
    t: float


@dataclass
class MagSample:
    m_b: np.ndarray  # body-frame field, normalized units
    t: float


@dataclass
class DepthSample:
    p_abs: float  # Pa
    t: float


@dataclass
class UsblFix:
    eta_meas: np.ndarray | None  # NED position, m
    accuracy: float  # predicted 1-sigma position error, m
    t: float
    valid: bool


class ImuModel:
    """100 Hz accelerometer/gyro triad with Gauss-Markov errors.

    The simulated specific force is the body acceleration minus gravity
    resolved into the body frame; transport-rate terms are left out to
    match the filter's mechanization.
    """

    def __init__(
        self,
        accel: GmErrorParams,
        gyro: GmErrorParams,
        rng: np.random.Generator,
    ):
        self.accel = accel
        self.gyro = gyro
        self._accel_err = GmError(accel, rng)
        self._gyro_err = GmError(gyro, rng)
        self.b_on_a = accel.turn_on_bias_std * rng.standard_normal(3)
        self.b_on_g = gyro.turn_on_bias_std * rng.standard_normal(3)

    def sample(self, nu1_dot: np.ndarray, q: np.ndarray, nu2: np.ndarray, t: float, dt: float) -> ImuSample:
        from ._kernels import imu_sample_kernel

        a, g = self._accel_err, self._gyro_err
        noise = a.rng.standard_normal((3, 3)), g.rng.standard_normal((3, 3))
        f, w = imu_sample_kernel(
            nu1_dot, q, nu2, GRAVITY_NED[2], self.b_on_a, self.b_on_g,
            a.z_b, a.z_k, a.params.N, a.params.B, a.params.K, a.params.corr_time,
            g.z_b, g.z_k, g.params.N, g.params.B, g.params.K, g.params.corr_time,
            self.accel.quantization_step, self.gyro.quantization_step, dt,
            noise[0], noise[1],
        )
        return ImuSample(f_ib_b=f, omega_ib_b=w, t=t)


class MagModel:
    """100 Hz magnetometer; iron effects assumed calibrated away."""

    def __init__(self, field_n: np.ndarray, params: GmErrorParams, rng: np.random.Generator):
        self.field_n = np.asarray(field_n, dtype=float)
        self.params = params
        self._err = GmError(params, rng)

    def sample(self, q: np.ndarray, t: float, dt: float) -> MagSample:
        from ._kernels import mag_sample_kernel

        e = self._err
        m = mag_sample_kernel(
            q, self.field_n, e.z_b, e.z_k, e.params.N, e.params.B, e.params.K,
            e.params.corr_time, self.params.quantization_step, dt,
            e.rng.standard_normal((3, 3)),
        )
        return MagSample(m_b=m, t=t)


class DepthModel:
    """2 Hz absolute pressure sensor with quantization and saturation."""

    def __init__(
        self,
        rng: np.random.Generator,
        sigma: float = 2500.0,
        quantization_step: float = 50.0,
        k_p: float = DEPTH_KP,
        p_0: float = DEPTH_P0,
        full_scale: float = DEPTH_FULL_SCALE,
    ):
        self.rng = rng
        self.sigma = sigma
        self.quantization_step = quantization_step
        self.k_p = k_p
        self.p_0 = p_0
        self.full_scale = full_scale

    def sample(self, depth: float, t: float) -> DepthSample:
        p = self.k_p * depth + self.p_0 + self.sigma * self.rng.standard_normal()
        p = quantize(p, self.quantization_step)
        p = float(np.clip(p, self.p_0, self.p_0 + self.full_scale))
        return DepthSample(p_abs=p, t=t)


def tetrahedron_array(circumradius: float = 0.1) -> np.ndarray:
    """Five-element array: tetrahedron vertices plus the modem at origin."""
    v = np.array(
        [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    ) / np.sqrt(3.0)
    return np.vstack([circumradius * v, np.zeros(3)])


@dataclass
class UsblParams:
    """Acoustic positioning geometry and noise levels."""

    c: float = 1500.0  # m/s sound speed
    hydrophone_positions: np.ndarray = field(default_factory=tetrahedron_array)
    sigma_rtt: float = 6.67e-6  # s
    sigma_tdoa: float = 0.3e-6  # s
    rate: float = 1.0  # Hz

    def __post_init__(self):
        self.hydrophone_positions = np.asarray(self.hydrophone_positions, dtype=float)


def pair_difference_matrix(n: int) -> np.ndarray:
    """Row per pair (i<j) selecting position difference p_i - p_j."""
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            r = np.zeros(n)
            r[i], r[j] = 1.0, -1.0
            rows.append(r)
    return np.array(rows)


class UsblModel:
    """1 Hz acoustic position fix from round-trip time plus TDOA direction.

    The transponder sits at the NED origin. TDOAs follow the plane-wave
    model over all hydrophone pairs; the direction is recovered by least
    squares and combined with the round-trip range into a NED position.
    The reported accuracy is the first-order propagation of the RTT/TDOA
    noise through that chain and is what scales the filter's USBL
    measurement covariance with range.
    """

    def __init__(
        self,
        params: UsblParams,
        rng: np.random.Generator,
        outage_windows: list[tuple[float, float]] | None = None,
    ):
        self.params = params
        self.rng = rng
        self.outage_windows = list(outage_windows or [])
        n = params.hydrophone_positions.shape[0]
        self.S = pair_difference_matrix(n) @ params.hydrophone_positions
        gram = self.S.T @ self.S
        if np.linalg.cond(gram) > 1e8:
            raise DegenerateGeometryError("hydrophone array gram matrix condition > 1e8")
        self.S_pinv = np.linalg.solve(gram, self.S.T)
        self._gram_inv = np.linalg.inv(gram)

    def in_outage(self, t: float) -> bool:
        return any(start <= t < start + dur for start, dur in self.outage_windows)

    def fix(self, eta1: np.ndarray, q: np.ndarray, t: float) -> UsblFix:
        if self.in_outage(t):
            return UsblFix(eta_meas=None, accuracy=np.nan, t=t, valid=False)
        p = self.params
        rng_to_home = float(np.linalg.norm(eta1))
        if rng_to_home < 0.5:
            raise InvalidFixError("AUV within 0.5 m of the transponder")
        rtt = 2.0 / p.c * rng_to_home + p.sigma_rtt * self.rng.standard_normal()
        C_bn = quat_to_dcm(q)
        d_true = C_bn.T @ (-eta1 / rng_to_home)  # unit direction AUV -> transponder, body
        delta_t = -(1.0 / p.c) * self.S @ d_true + p.sigma_tdoa * self.rng.standard_normal(
            self.S.shape[0]
        )
        d_hat = -p.c * self.S_pinv @ delta_t
        u_hat = d_hat / np.linalg.norm(d_hat)
        range_hat = 0.5 * p.c * rtt
        eta_meas = -range_hat * (C_bn @ u_hat)

        sigma_r = 0.5 * p.c * p.sigma_rtt
        cov_d = (p.c * p.sigma_tdoa) ** 2 * self._gram_inv
        proj = np.eye(3) - np.outer(u_hat, u_hat)
        jac = proj / np.linalg.norm(d_hat)
        cov_u = jac @ cov_d @ jac.T
        # floor keeps the downstream R weighting positive definite even in
        # noise-free regression runs
        accuracy = max(
            float(np.sqrt(sigma_r**2 + range_hat**2 * np.trace(cov_u))), 0.05
        )
        return UsblFix(eta_meas=eta_meas, accuracy=accuracy, t=t, valid=True)
