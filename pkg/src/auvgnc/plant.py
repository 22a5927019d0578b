"""Ground-truth vehicle simulation.

Fossen-type 6-DOF rigid-body dynamics with added mass, linear damping and
hydrostatic restoring terms, driven by idealized actuators, plus a
first-order Gauss-Markov water current. The truth integrator is RK4 at the
100 Hz base rate; the navigation filters deliberately use coarser explicit
Euler so their discretization error is realistic.

The exact hydrodynamics of the target vehicle are unknown at this stage, so
:func:`nominal_params` defines a documented torpedo-shaped nominal set that
all tests are parametrized over.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .frames import quat_kinematics_rhs, quat_normalize, quat_to_dcm

GRAVITY = 9.81  # m/s^2


class SingularMassError(ValueError):
    """Combined mass matrix is not symmetric positive definite."""


class PlantDivergedError(RuntimeError):
    """A plant state magnitude exceeded the sanity bound."""


def _check_spd(mat: np.ndarray, name: str) -> None:
    if not np.allclose(mat, mat.T, atol=1e-9):
        raise SingularMassError(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise SingularMassError(f"{name} is not positive definite") from exc


@dataclass
class HydroParams:
    """Rigid-body, added-mass, damping and hydrostatic parameters.

    M_rb + M_a must be symmetric positive definite and D_lin positive
    semi-definite; violations raise :class:`SingularMassError` at
    construction.
    """

    M_rb: np.ndarray
    M_a: np.ndarray
    D_lin: np.ndarray
    weight: float
    buoyancy: float
    r_g: np.ndarray
    r_b: np.ndarray

    def __post_init__(self):
        self.M_rb = np.asarray(self.M_rb, dtype=float)
        self.M_a = np.asarray(self.M_a, dtype=float)
        self.D_lin = np.asarray(self.D_lin, dtype=float)
        self.r_g = np.asarray(self.r_g, dtype=float)
        self.r_b = np.asarray(self.r_b, dtype=float)
        _check_spd(self.M_rb + self.M_a, "M_rb + M_a")
        if not np.allclose(self.D_lin, self.D_lin.T, atol=1e-9):
            raise SingularMassError("D_lin is not symmetric")
        if np.any(np.linalg.eigvalsh(self.D_lin) < -1e-9):
            raise SingularMassError("D_lin is not positive semi-definite")
        self._M = self.M_rb + self.M_a
        self._M_inv = np.linalg.inv(self._M)

    @property
    def mass_matrix(self) -> np.ndarray:
        return self._M

    @property
    def mass_matrix_inv(self) -> np.ndarray:
        return self._M_inv


@dataclass
class ActuatorParams:
    """Idealized actuator gains and geometry."""

    main_thrust_max: float = 10.0  # N, surge
    diff_thrust_max: float = 5.0  # N per thruster of the lateral pair
    diff_lever_y: float = 0.15  # m, lateral offset of the pair
    vert_thrust_max: float = 10.0  # N, heave
    vert_lever_x: float = 0.3  # m, vertical thruster ahead of the CG
    movable_mass_moment_max: float = 2.5  # N*m pitch authority (feed-forward)
    buoyancy_delta_max: float = 5.0  # N heave authority (feed-forward)


@dataclass
class VehicleState:
    """Ground-truth 6-DOF state: body velocities and NED pose."""

    nu1: np.ndarray  # [u, v, w] m/s
    nu2: np.ndarray  # [p, q, r] rad/s
    eta1: np.ndarray  # [n, e, d] m
    q: np.ndarray  # unit quaternion body->NED

    def copy(self) -> "VehicleState":
        return VehicleState(self.nu1.copy(), self.nu2.copy(), self.eta1.copy(), self.q.copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.nu1, self.nu2, self.eta1, self.q])

    @staticmethod
    def from_vector(x: np.ndarray) -> "VehicleState":
        return VehicleState(x[0:3].copy(), x[3:6].copy(), x[6:9].copy(), x[9:13].copy())

    @staticmethod
    def at_rest(eta1, q) -> "VehicleState":
        return VehicleState(np.zeros(3), np.zeros(3), np.asarray(eta1, float), np.asarray(q, float))


@dataclass
class ActuatorCommand:
    """Normalized thruster commands plus the two feed-forward channels."""

    thruster: np.ndarray = field(default_factory=lambda: np.zeros(3))  # [main, diff, vert] in [-1, 1]
    movable_mass_pos: float = 0.0  # normalized [-1, 1]
    buoyancy_delta: float = 0.0  # N


@dataclass
class WaterCurrentParams:
    """First-order Gauss-Markov water current model."""

    mu: float = 0.2  # 1/s inverse correlation time
    sigma_w: np.ndarray = field(default_factory=lambda: np.array([0.05, 0.05, 0.01]))
    v_max: np.ndarray = field(default_factory=lambda: np.array([0.20, 0.20, 0.05]))

    def __post_init__(self):
        self.sigma_w = np.asarray(self.sigma_w, dtype=float)
        self.v_max = np.asarray(self.v_max, dtype=float)
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if np.any(self.sigma_w < 0) or np.any(self.v_max < 0):
            raise ValueError("sigma_w and v_max must be nonnegative")


def nominal_params() -> HydroParams:
    """Documented nominal torpedo-shaped vehicle (25 kg, 0.8 m).

    Diagonal added mass is 10% of the rigid-body terms translationally and
    50% rotationally; damping gives ~1 m/s terminal surge at full thrust;
    the vehicle is neutrally trimmed with the buoyancy center 2 cm above
    the CG for a restoring moment.
    """
    m = 25.0
    inertia = np.array([0.15, 1.4, 1.4])
    M_rb = np.diag([m, m, m, *inertia])
    M_a = np.diag([0.1 * m, 0.1 * m, 0.1 * m, *(0.5 * inertia)])
    D = np.diag([10.0, 40.0, 40.0, 0.3, 3.0, 3.0])
    W = m * GRAVITY
    return HydroParams(
        M_rb=M_rb,
        M_a=M_a,
        D_lin=D,
        weight=W,
        buoyancy=W,
        r_g=np.zeros(3),
        r_b=np.array([0.0, 0.0, -0.02]),
    )


def coriolis_product(M: np.ndarray, nu: np.ndarray, nu_other: np.ndarray | None = None) -> np.ndarray:
    """C(nu) @ nu_other using the standard skew-form construction from M.

    ``nu`` builds the matrix; ``nu_other`` (default ``nu``) is multiplied.
    Broadcasts over a leading batch axis.
    """
    if nu_other is None:
        nu_other = nu
    nu1, nu2 = nu[..., 0:3], nu[..., 3:6]
    p1 = nu1 @ M[0:3, 0:3].T + nu2 @ M[0:3, 3:6].T
    p2 = nu1 @ M[3:6, 0:3].T + nu2 @ M[3:6, 3:6].T
    o1, o2 = nu_other[..., 0:3], nu_other[..., 3:6]
    top = np.cross(o2, p1)
    bottom = np.cross(o1, p1) + np.cross(o2, p2)
    return np.concatenate([top, bottom], axis=-1)


def restoring_force(C_bn: np.ndarray, params: HydroParams) -> np.ndarray:
    """Hydrostatic term g(eta) of the dynamics (moved to the left-hand side).

    Broadcasts over a leading batch axis of rotation matrices.
    """
    fw = C_bn[..., 2, :] * params.weight  # C_n^b @ [0,0,W] = row 2 of C_b^n * W
    fb = C_bn[..., 2, :] * (-params.buoyancy)
    force = fw + fb
    moment = np.cross(params.r_g, fw) + np.cross(params.r_b, fb)
    return -np.concatenate([force, moment], axis=-1)


def fossen_nu_dot(
    nu: np.ndarray,
    q: np.ndarray,
    v_c_n: np.ndarray,
    tau: np.ndarray,
    params: HydroParams,
    C_bn: np.ndarray | None = None,
) -> np.ndarray:
    """Body-frame acceleration from the 6-DOF dynamics, batched.

    Solves (M_rb + M_a) nu_dot = tau - C_rb(nu) nu - C_a(nu_r) nu_r
    - D nu_r - g(eta), with nu_r the velocity relative to the current
    rotated into the body frame.
    """
    if C_bn is None:
        C_bn = quat_to_dcm(q)
    v_c_b = np.einsum("...ji,...j->...i", C_bn, v_c_n)  # C_n^b = C_b^n^T
    nu_r = nu.copy()
    nu_r[..., 0:3] -= v_c_b
    rhs = (
        tau
        - coriolis_product(params.M_rb, nu)
        - coriolis_product(params.M_a, nu_r)
        - nu_r @ params.D_lin.T
        - restoring_force(C_bn, params)
    )
    return rhs @ params.mass_matrix_inv.T


def fossen_rhs(
    state: VehicleState,
    tau: np.ndarray,
    v_c_n: np.ndarray,
    params: HydroParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full state derivative (nu_dot, eta1_dot, q_dot) of the truth model."""
    nu = np.concatenate([state.nu1, state.nu2])
    C_bn = quat_to_dcm(state.q)
    nu_dot = fossen_nu_dot(nu, state.q, v_c_n, tau, params, C_bn=C_bn)
    eta1_dot = C_bn @ state.nu1
    q_dot = quat_kinematics_rhs(state.q, state.nu2)
    return nu_dot, eta1_dot, q_dot


def actuator_map(cmd: ActuatorCommand, act: ActuatorParams) -> np.ndarray:
    """Generalized force [X, Y, Z, K, M, N] from a (clamped) actuator command.

    The lateral pair runs differentially, so it contributes a pure yaw
    moment with zero net surge; sway stays unactuated. The vertical
    thruster sits aft of the CG, so heave thrust couples into a pitch
    moment, which is what gives the LQR its pitch authority.
    """
    c = np.clip(np.asarray(cmd.thruster, dtype=float), -1.0, 1.0)
    t_port = c[1] * act.diff_thrust_max
    t_stbd = -c[1] * act.diff_thrust_max
    t_vert = c[2] * act.vert_thrust_max
    X = c[0] * act.main_thrust_max + (t_port + t_stbd)
    Z = t_vert + np.clip(cmd.buoyancy_delta, -act.buoyancy_delta_max, act.buoyancy_delta_max)
    K = 0.0
    M = -act.vert_lever_x * t_vert + np.clip(cmd.movable_mass_pos, -1.0, 1.0) * act.movable_mass_moment_max
    N = act.diff_lever_y * (t_port - t_stbd)
    return np.array([X, 0.0, Z, K, M, N])


def current_step(
    v_c_n: np.ndarray,
    params: WaterCurrentParams,
    dt: float,
    noise: np.ndarray,
) -> np.ndarray:
    """One Euler-Maruyama step of the Gauss-Markov current, then clamp."""
    v = v_c_n + dt * (-params.mu * v_c_n) + np.sqrt(dt) * params.sigma_w * noise
    return np.clip(v, -params.v_max, params.v_max)


def integrate_plant(
    state: VehicleState,
    tau: np.ndarray,
    v_c_n: np.ndarray,
    params: HydroParams,
    dt: float,
) -> VehicleState:
    """One RK4 step of the truth dynamics with quaternion renormalization."""
    from ._kernels import plant_rk4  # deferred: keeps import light for non-sim use

    x0 = np.empty(13)
    x0[0:3] = state.nu1
    x0[3:6] = state.nu2
    x0[6:9] = state.eta1
    x0[9:13] = state.q
    x1 = plant_rk4(
        x0, np.asarray(tau, float), np.asarray(v_c_n, float),
        params.M_rb, params.M_a, params.mass_matrix_inv, params.D_lin,
        params.weight, params.buoyancy, params.r_g, params.r_b, dt,
    )
    if np.any(np.abs(x1) > 1e6) or not np.all(np.isfinite(x1)):
        raise PlantDivergedError("plant state exceeded 1e6 or went non-finite")
    return VehicleState(x1[0:3], x1[3:6], x1[6:9], x1[9:13])


def apply_model_mismatch(params: HydroParams, seed: int) -> HydroParams:
    """Seeded perturbation of added mass, damping and trim.

    Diagonal entries of M_a and D_lin get independent log-uniform factors
    in [0.7, 1.3]; the weight-buoyancy balance is shifted by a uniform
    +-2% of the weight. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    lo, hi = np.log(0.7), np.log(1.3)
    f_ma = np.exp(rng.uniform(lo, hi, size=6))
    f_d = np.exp(rng.uniform(lo, hi, size=6))
    M_a = params.M_a.copy()
    D = params.D_lin.copy()
    idx = np.arange(6)
    M_a[idx, idx] *= f_ma
    D[idx, idx] *= f_d
    delta_wb = rng.uniform(-0.02, 0.02) * params.weight
    return replace(params, M_a=M_a, D_lin=D, buoyancy=params.weight - delta_wb)


def surge_trim(params: HydroParams, act: ActuatorParams, surge: float) -> tuple[np.ndarray, ActuatorCommand]:
    """Steady straight-and-level trim at the given surge speed.

    Returns the trim generalized force and the command realizing it. Valid
    for the neutrally-buoyant nominal vehicle where pure surge is an
    equilibrium.
    """
    nu_trim = np.array([surge, 0, 0, 0, 0, 0])
    tau_trim = params.D_lin @ nu_trim
    cmd = ActuatorCommand(thruster=np.array([tau_trim[0] / act.main_thrust_max, 0.0, 0.0]))
    return tau_trim, cmd
