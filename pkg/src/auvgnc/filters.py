"""Navigation filters: strapdown and hydrodynamic-model UKFs plus AHRS.

Two unscented Kalman filters share the quaternion-aware UKF core but use
different prediction models:

- ``SinsFilter`` integrates IMU specific force and rate at 100 Hz and
  estimates accelerometer/gyro biases; it fuses magnetometer vectors
  directly.
- ``HmmFilter`` predicts with the vehicle's (nominal) hydrodynamic model
  from the commanded generalized forces at the 10 Hz control rate and
  estimates the horizontal water current; instead of raw magnetometer
  data it fuses the Euler-angle solution of an external Mahony AHRS.

Both fuse depth pressure and range-weighted USBL position fixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from scipy.stats import chi2

from . import _kernels, frames
from .plant import HydroParams, fossen_nu_dot
from .sensors import DEPTH_KP, DEPTH_P0, GRAVITY_NED, ImuSample, MagSample, UsblFix
from .ukf import CholeskyFailure, QuatChart, SigmaPointParams, ukf_predict, ukf_update

DEG = np.pi / 180.0

# 99.9% gating thresholds per innovation dimension (flag only, no rejection)
CHI2_999 = {k: float(chi2.ppf(0.999, df=k)) for k in (1, 2, 3)}


class FilterCrash(RuntimeError):
    """Covariance breakdown or non-finite state; treated as data upstream."""


@dataclass
class NoiseConfig:
    """Process/measurement/initial noise levels for both filters.

    The strapdown process densities default to the identified sensor error
    magnitudes; the hydrodynamic process densities are a designer's choice.
    All entries are 1-sigma values in SI units except where a ``_deg``
    suffix says otherwise.
    """

    # strapdown process noise (white densities driving the error state)
    sins_sigma_accel: float = 1.2e-3  # m/s^2 / sqrt(Hz)
    sins_sigma_gyro: float = 4.4e-5  # rad/s / sqrt(Hz)
    sins_sigma_ba: float = 9.0e-5  # accel bias drive
    sins_sigma_bg: float = 5.4e-7  # gyro bias drive

    # hydrodynamic process noise
    hmm_sigma_nu1: float = 1e-3  # m/s
    hmm_sigma_nu2: float = 1e-3  # rad/s
    hmm_sigma_eta1: float = 0.01  # m
    hmm_sigma_eta2_deg: float = 0.01  # deg
    hmm_sigma_current: float = 1e-3  # m/s

    # measurement noise
    r_usbl: float = 1.0  # m
    r_press: float = 2500.0  # Pa
    r_mag: float = 0.01  # normalized field units
    r_ahrs_deg: np.ndarray = field(default_factory=lambda: np.array([0.25, 0.25, 0.80]))

    # initial standard deviations
    p0_nu1: float = 0.25
    p0_nu2: float = 0.5
    p0_eta1: float = 0.5
    p0_eta2_deg: float = 2.5
    p0_current: float = 5.0
    p0_ba: float = 0.1
    p0_bg_dps: float = 1e-3

    def sins_Q(self, a: np.ndarray | None = None) -> np.ndarray:
        """Strapdown process noise; a = log10 multipliers (a1..a4 used)."""
        m = 10.0 ** np.asarray(a[:5], dtype=float) if a is not None else np.ones(5)
        d = np.zeros(15)
        d[0:3] = (self.sins_sigma_accel**2) * m[0]
        d[6:9] = (self.sins_sigma_gyro**2) * m[1]
        d[9:12] = (self.sins_sigma_ba**2) * m[2]
        d[12:15] = (self.sins_sigma_bg**2) * m[3]
        return np.diag(d)

    def hmm_Q(self, a: np.ndarray | None = None) -> np.ndarray:
        """Hydrodynamic process noise; a = log10 multipliers (a1..a4 used)."""
        m = 10.0 ** np.asarray(a[:5], dtype=float) if a is not None else np.ones(5)
        d = np.zeros(14)
        d[0:3] = (self.hmm_sigma_nu1**2) * m[0]
        d[3:6] = (self.hmm_sigma_nu2**2) * m[2]
        d[6:9] = (self.hmm_sigma_eta1**2) * m[1]
        d[9:12] = ((self.hmm_sigma_eta2_deg * DEG) ** 2) * m[3]
        d[12:14] = self.hmm_sigma_current**2
        return np.diag(d)

    def R_mag(self, a: np.ndarray | None = None) -> np.ndarray:
        m = 10.0 ** float(a[4]) if a is not None else 1.0
        return np.eye(3) * (self.r_mag**2) * m

    def R_ahrs(self, a: np.ndarray | None = None) -> np.ndarray:
        m = 10.0 ** float(a[4]) if a is not None else 1.0
        return np.diag((self.r_ahrs_deg * DEG) ** 2) * m

    def R_press(self) -> np.ndarray:
        return np.array([[self.r_press**2]])

    def R_usbl(self) -> np.ndarray:
        return np.eye(3) * self.r_usbl**2

    def sins_P0(self) -> np.ndarray:
        d = np.zeros(15)
        d[0:3] = self.p0_nu1**2
        d[3:6] = self.p0_eta1**2
        d[6:9] = (self.p0_eta2_deg * DEG) ** 2
        d[9:12] = self.p0_ba**2
        d[12:15] = (self.p0_bg_dps * DEG) ** 2
        return np.diag(d)

    def hmm_P0(self) -> np.ndarray:
        d = np.zeros(14)
        d[0:3] = self.p0_nu1**2
        d[3:6] = self.p0_nu2**2
        d[6:9] = self.p0_eta1**2
        d[9:12] = (self.p0_eta2_deg * DEG) ** 2
        d[12:14] = self.p0_current**2
        return np.diag(d)


@dataclass
class MahonyParams:
    """Complementary filter gains (auto-tuned values)."""

    k_p: float = 55.7037
    k_i: float = 48.3934
    k1: float = 0.4828
    k2: float = 0.0749


class MahonyAhrs:
    """Mahony complementary filter fusing gyro, accelerometer and MAG.

    The error signal sums weighted cross products between measured and
    predicted gravity/field directions; its integral tracks the gyro bias.
    """

    def __init__(self, params: MahonyParams, field_n: np.ndarray, q0: np.ndarray):
        self.params = params
        self.field_dir_n = np.asarray(field_n, float) / np.linalg.norm(field_n)
        self.q = np.asarray(q0, float).copy()
        self.bias = np.zeros(3)

    def step(self, imu: ImuSample, mag: MagSample, dt: float) -> np.ndarray:
        p = self.params
        self.q, self.bias = _kernels.mahony_full_step(
            self.q, self.bias, imu.f_ib_b, imu.omega_ib_b, mag.m_b,
            self.field_dir_n, p.k_p, p.k_i, p.k1, p.k2, dt,
        )
        return self.q

    def euler(self) -> np.ndarray:
        return frames.quat_to_euler(self.q)


def sins_rhs(X: np.ndarray, f_meas: np.ndarray, w_meas: np.ndarray, ned_velocity: bool = False) -> np.ndarray:
    """Strapdown process model over a batch of full states (m, 16).

    State layout: [nu1, eta1, q, b_a, b_g]. By default nu1 is the
    body-frame velocity (consistent with the dynamics model); the
    ``ned_velocity`` switch reinterprets it as NED velocity.
    """
    q = X[:, 6:10]
    C_bn = frames.quat_to_dcm(q)
    f_corr = f_meas[None, :] - X[:, 10:13]
    out = np.zeros_like(X)
    if ned_velocity:
        out[:, 0:3] = np.einsum("mij,mj->mi", C_bn, f_corr) + GRAVITY_NED
        out[:, 3:6] = X[:, 0:3]
    else:
        # gravity resolved into the body frame: C_n^b g = g3 * row 2 of C_b^n
        out[:, 0:3] = f_corr + C_bn[:, 2, :] * GRAVITY_NED[2]
        out[:, 3:6] = np.einsum("mij,mj->mi", C_bn, X[:, 0:3])
    out[:, 6:10] = frames.quat_kinematics_rhs(q, w_meas[None, :] - X[:, 13:16])
    return out


def hmm_rhs(X: np.ndarray, tau: np.ndarray, params: HydroParams) -> np.ndarray:
    """Hydrodynamic process model over a batch of full states (m, 15).

    State layout: [nu1, nu2, eta1, q, u_c, v_c]; the current components are
    a random walk (zero drift), the heave current is neglected.
    """
    nu = X[:, 0:6]
    q = X[:, 9:13]
    v_c_n = np.zeros((X.shape[0], 3))
    v_c_n[:, 0] = X[:, 13]
    v_c_n[:, 1] = X[:, 14]
    C_bn = frames.quat_to_dcm(q)
    out = np.zeros_like(X)
    out[:, 0:6] = fossen_nu_dot(nu, q, v_c_n, tau, params, C_bn=C_bn)
    out[:, 6:9] = np.einsum("mij,mj->mi", C_bn, X[:, 0:3])
    out[:, 9:13] = frames.quat_kinematics_rhs(q, X[:, 3:6])
    return out


def depth_meas_model(eta1_d_index: int):
    """Affine pressure prediction from the estimated depth component."""

    def model(X: np.ndarray) -> np.ndarray:
        return (DEPTH_KP * X[:, eta1_d_index] + DEPTH_P0)[:, None]

    return model


def mag_meas_model(field_n: np.ndarray, quat_index: int):
    """Predicted body-frame field: C_n^b(q) m_n."""
    m_n = np.asarray(field_n, float)

    def model(X: np.ndarray) -> np.ndarray:
        C_bn = frames.quat_to_dcm(X[:, quat_index : quat_index + 4])
        return np.einsum("mji,j->mi", C_bn, m_n)

    return model


def ahrs_meas_model(quat_index: int):
    """Predicted Euler angles of the estimated quaternion."""

    def model(X: np.ndarray) -> np.ndarray:
        return frames.quat_to_euler(X[:, quat_index : quat_index + 4])

    return model


def usbl_meas_model(eta1_slice: slice):
    """Predicted USBL position: the position estimate itself."""

    def model(X: np.ndarray) -> np.ndarray:
        return X[:, eta1_slice]

    return model


def scale_usbl_R(R_base: np.ndarray, fix: UsblFix) -> np.ndarray:
    """Range-dependent weighting: variance scales with reported accuracy^2."""
    from .sensors import InvalidFixError

    if not fix.valid:
        raise InvalidFixError("cannot build USBL update from an outage fix")
    return R_base * fix.accuracy**2


class _UkfNavFilter:
    """Shared predict/update plumbing for both navigation filters.

    ``fast=True`` routes through the compiled kernels; the plain-numpy
    reference engine stays available for the equivalence tests.
    """

    def __init__(self, chart: QuatChart, spp: SigmaPointParams, x0, P0, Q, fast=True):
        self.chart = chart
        self.spp = spp
        self.x = np.asarray(x0, float).copy()
        self.P = np.asarray(P0, float).copy()
        self.Q = Q
        self.fast = fast
        self.outlier_count = 0
        n = chart.dim_err
        self._c, self._wm, self._wc = spp.weights(n)

    def _guard(self):
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.P)):
            raise FilterCrash("non-finite filter state")

    def _sigma_fast(self):
        try:
            return _kernels.sigma_points_quat(self.x, self.P, self._c, self.chart.qi)
        except np.linalg.LinAlgError as exc:
            raise FilterCrash("covariance not positive definite") from exc

    def _finish_predict_fast(self, X, dt):
        X = _kernels.renormalize_quat_rows(X, self.chart.qi)
        self.x, self.P = _kernels.mean_cov_quat(X, self._wm, self._wc, self.Q * dt, self.chart.qi)
        self._guard()

    def _update_fast(self, X, Z, R, z, angular=None):
        if angular is None:
            angular = np.zeros(Z.shape[1], dtype=np.bool_)
        try:
            self.x, self.P, innov, nis = _kernels.update_core(
                self.x, self.P, X, Z, R, z, self._wm, self._wc, self.chart.qi, angular
            )
        except np.linalg.LinAlgError as exc:
            raise FilterCrash("innovation covariance singular") from exc
        if nis > CHI2_999[Z.shape[1]]:
            self.outlier_count += 1
        self._guard()
        return innov

    def _predict(self, rhs, dt):
        try:
            self.x, self.P = ukf_predict(self.x, self.P, rhs, self.Q, dt, self.spp, self.chart)
        except CholeskyFailure as exc:
            raise FilterCrash(str(exc)) from exc
        self._guard()

    def _update(self, model, R, z, angular=None):
        try:
            self.x, self.P, innov, outlier = ukf_update(
                self.x, self.P, model, R, z, self.spp, self.chart, angular=angular
            )
        except CholeskyFailure as exc:
            raise FilterCrash(str(exc)) from exc
        if outlier:
            self.outlier_count += 1
        self._guard()
        return innov


class SinsFilter(_UkfNavFilter):
    """UKF with strapdown inertial prediction; fuses MAG, depth, USBL."""

    ETA1 = slice(3, 6)
    QUAT = 6

    def __init__(
        self,
        noise: NoiseConfig,
        field_n: np.ndarray,
        tuning: np.ndarray | None = None,
        alpha: float = 1.0,
        ned_velocity: bool = False,
        fast: bool = True,
    ):
        chart = QuatChart(16, self.QUAT)
        super().__init__(
            chart,
            SigmaPointParams(alpha=alpha),
            np.zeros(16),
            noise.sins_P0(),
            noise.sins_Q(tuning),
            fast=fast and not ned_velocity,
        )
        self.noise = noise
        self.ned_velocity = ned_velocity
        self._field_n = np.asarray(field_n, float)
        self._mag_model = mag_meas_model(field_n, self.QUAT)
        self._depth_model = depth_meas_model(5)
        self._usbl_model = usbl_meas_model(self.ETA1)
        self._R_mag = noise.R_mag(tuning)
        self._R_press = noise.R_press()
        self._R_usbl = noise.R_usbl()

    def initialize(self, nu1: np.ndarray, eta1: np.ndarray, q: np.ndarray):
        """Velocity/pose from ground truth, biases zero (mission start)."""
        self.x[0:3] = nu1
        self.x[3:6] = eta1
        self.x[6:10] = q
        self.x[10:16] = 0.0

    def predict(self, imu: ImuSample, dt: float):
        f, w = imu.f_ib_b, imu.omega_ib_b
        if self.fast:
            X = self._sigma_fast()
            X = X + dt * _kernels.sins_rhs_batch(X, f, w, GRAVITY_NED[2])
            self._finish_predict_fast(X, dt)
        else:
            ned = self.ned_velocity
            self._predict(lambda X: sins_rhs(X, f, w, ned), dt)

    def update_mag(self, mag: MagSample):
        if self.fast:
            X = self._sigma_fast()
            Z = _kernels.mag_h(X, self._field_n, self.QUAT)
            return self._update_fast(X, Z, self._R_mag, mag.m_b)
        return self._update(self._mag_model, self._R_mag, mag.m_b)

    def update_depth(self, p_abs: float):
        if self.fast:
            X = self._sigma_fast()
            Z = (DEPTH_KP * X[:, 5] + DEPTH_P0)[:, None]
            return self._update_fast(X, Z, self._R_press, np.array([p_abs]))
        return self._update(self._depth_model, self._R_press, np.array([p_abs]))

    def update_usbl(self, fix: UsblFix):
        R = scale_usbl_R(self._R_usbl, fix)
        if self.fast:
            X = self._sigma_fast()
            Z = np.ascontiguousarray(X[:, self.ETA1])
            return self._update_fast(X, Z, R, fix.eta_meas)
        return self._update(self._usbl_model, R, fix.eta_meas)

    @property
    def nu1(self):
        return self.x[0:3]

    @property
    def eta1(self):
        return self.x[3:6]

    @property
    def q(self):
        return self.x[6:10]

    @property
    def gyro_bias(self):
        return self.x[13:16]

    def body_velocity(self, omega_meas: np.ndarray | None = None) -> np.ndarray:
        if not self.ned_velocity:
            return self.x[0:3]
        return frames.quat_to_dcm(self.q).T @ self.x[0:3]

    def rates(self, omega_meas: np.ndarray) -> np.ndarray:
        """Body rates reconstructed from the gyro minus the bias estimate."""
        return omega_meas - self.gyro_bias


class HmmFilter(_UkfNavFilter):
    """UKF with hydrodynamic prediction; fuses AHRS Euler, depth, USBL."""

    ETA1 = slice(6, 9)
    QUAT = 9

    def __init__(
        self,
        noise: NoiseConfig,
        hydro: HydroParams,
        tuning: np.ndarray | None = None,
        alpha: float = 1e-3,
        fast: bool = True,
    ):
        chart = QuatChart(15, self.QUAT)
        super().__init__(
            chart,
            SigmaPointParams(alpha=alpha),
            np.zeros(15),
            noise.hmm_P0(),
            noise.hmm_Q(tuning),
            fast=fast,
        )
        self.noise = noise
        self.hydro = hydro
        self._ahrs_model = ahrs_meas_model(self.QUAT)
        self._depth_model = depth_meas_model(8)
        self._usbl_model = usbl_meas_model(self.ETA1)
        self._R_ahrs = noise.R_ahrs(tuning)
        self._R_press = noise.R_press()
        self._R_usbl = noise.R_usbl()
        self._angular = np.array([True, True, True])

    def initialize(self, nu1: np.ndarray, nu2: np.ndarray, eta1: np.ndarray, q: np.ndarray):
        self.x[0:3] = nu1
        self.x[3:6] = nu2
        self.x[6:9] = eta1
        self.x[9:13] = q
        self.x[13:15] = 0.0

    def predict(self, tau: np.ndarray, dt: float):
        h = self.hydro
        if self.fast:
            X = self._sigma_fast()
            X = X + dt * _kernels.hmm_rhs_batch(
                X, tau, h.M_rb, h.M_a, h.mass_matrix_inv, h.D_lin,
                h.weight, h.buoyancy, h.r_g, h.r_b,
            )
            self._finish_predict_fast(X, dt)
        else:
            self._predict(lambda X: hmm_rhs(X, tau, h), dt)

    def update_ahrs(self, euler_meas: np.ndarray):
        if self.fast:
            X = self._sigma_fast()
            Z, locked = _kernels.euler_h(X, self.QUAT)
            if locked:
                raise FilterCrash("AHRS update at gimbal lock")
            return self._update_fast(X, Z, self._R_ahrs, euler_meas, angular=self._angular)
        try:
            return self._update(self._ahrs_model, self._R_ahrs, euler_meas, angular=self._angular)
        except frames.GimbalLockError as exc:
            raise FilterCrash("AHRS update at gimbal lock") from exc

    def update_depth(self, p_abs: float):
        if self.fast:
            X = self._sigma_fast()
            Z = (DEPTH_KP * X[:, 8] + DEPTH_P0)[:, None]
            return self._update_fast(X, Z, self._R_press, np.array([p_abs]))
        return self._update(self._depth_model, self._R_press, np.array([p_abs]))

    def update_usbl(self, fix: UsblFix):
        R = scale_usbl_R(self._R_usbl, fix)
        if self.fast:
            X = self._sigma_fast()
            Z = np.ascontiguousarray(X[:, self.ETA1])
            return self._update_fast(X, Z, R, fix.eta_meas)
        return self._update(self._usbl_model, R, fix.eta_meas)

    @property
    def nu1(self):
        return self.x[0:3]

    @property
    def nu2(self):
        return self.x[3:6]

    @property
    def eta1(self):
        return self.x[6:9]

    @property
    def q(self):
        return self.x[9:13]

    def body_velocity(self, omega_meas=None) -> np.ndarray:
        return self.x[0:3]
