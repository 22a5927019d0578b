"""LQR control of surge, pitch and yaw with integral augmentation.

The design model comes from central-difference linearization of the full
dynamics at a straight-and-level trim, discretized at the 10 Hz control
rate by a second-order matrix-exponential truncation. The regulator acts
on [u, theta, psi, q, r] plus three integral error states and commands
the three thrusters; movable mass and buoyancy are strictly feed-forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import euler_to_quat, quat_to_dcm, wrap_angle
from .plant import ActuatorCommand, ActuatorParams, HydroParams, actuator_map, fossen_nu_dot


class NonEquilibriumError(ValueError):
    """Linearization point is not an equilibrium of the dynamics."""


class RiccatiDivergedError(RuntimeError):
    """DARE fixed-point iteration failed to converge."""


# 12-state linearization vector: [nu(6), position(3), euler(3)]
IDX_U, IDX_Q, IDX_R = 0, 4, 5
IDX_N, IDX_E, IDX_D = 6, 7, 8
IDX_PHI, IDX_THETA, IDX_PSI = 9, 10, 11
CONTROL_STATE_IDX = (IDX_U, IDX_THETA, IDX_PSI, IDX_Q, IDX_R)


def euler_rate_matrix(phi: float, theta: float) -> np.ndarray:
    """Body rates to Euler angle rates (zyx convention)."""
    sph, cph = np.sin(phi), np.cos(phi)
    tth, cth = np.tan(theta), np.cos(theta)
    return np.array(
        [
            [1.0, sph * tth, cph * tth],
            [0.0, cph, -sph],
            [0.0, sph / cth, cph / cth],
        ]
    )


def full_rhs_euler(x: np.ndarray, u_cmd: np.ndarray, params: HydroParams, act: ActuatorParams) -> np.ndarray:
    """12-state derivative with Euler-angle attitude, for linearization."""
    nu = x[0:6]
    phi, theta, psi = x[9:12]
    q = euler_to_quat(phi, theta, psi)
    tau = actuator_map(ActuatorCommand(thruster=u_cmd), act)
    nu_dot = fossen_nu_dot(nu, q, np.zeros(3), tau, params)
    eta1_dot = quat_to_dcm(q) @ nu[0:3]
    euler_dot = euler_rate_matrix(phi, theta) @ nu[3:6]
    return np.concatenate([nu_dot, eta1_dot, euler_dot])


def linearize_discretize(
    params: HydroParams,
    act: ActuatorParams,
    trim_surge: float,
    dt: float = 0.1,
    eps: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Jacobians of the dynamics at straight-and-level trim, discretized.

    Returns (A_d, B_d, x_trim, u_trim) on the 12-state vector. Central
    differences around the trim; discretization A_d = I + A dt + A^2 dt^2/2.
    Raises :class:`NonEquilibriumError` when the trim point does not cancel
    the dynamics.
    """
    x_trim = np.zeros(12)
    x_trim[IDX_U] = trim_surge
    u_trim = np.array([params.D_lin[0, 0] * trim_surge / act.main_thrust_max, 0.0, 0.0])
    f0 = full_rhs_euler(x_trim, u_trim, params, act)
    # translating equilibrium: position rates are allowed, dynamics are not
    f_dyn = np.concatenate([f0[0:6], f0[9:12]])
    if np.linalg.norm(f_dyn) > 1e-6:
        raise NonEquilibriumError(f"|f(trim)| = {np.linalg.norm(f_dyn):.3g}")

    A = np.zeros((12, 12))
    for j in range(12):
        dx = np.zeros(12)
        dx[j] = eps
        A[:, j] = (
            full_rhs_euler(x_trim + dx, u_trim, params, act)
            - full_rhs_euler(x_trim - dx, u_trim, params, act)
        ) / (2 * eps)
    B = np.zeros((12, 3))
    for j in range(3):
        du = np.zeros(3)
        du[j] = eps
        B[:, j] = (
            full_rhs_euler(x_trim, u_trim + du, params, act)
            - full_rhs_euler(x_trim, u_trim - du, params, act)
        ) / (2 * eps)

    A_d = np.eye(12) + A * dt + (A @ A) * (dt**2 / 2.0)
    B_d = (np.eye(12) * dt + A * (dt**2 / 2.0)) @ B
    return A_d, B_d, x_trim, u_trim


def solve_dare(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    tol: float = 1e-13,
    max_iter: int = 10000,
) -> np.ndarray:
    """Discrete algebraic Riccati equation by fixed-point iteration."""
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        K = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ (A - B @ K)
        if np.max(np.abs(P_next - P)) < tol * max(1.0, np.max(np.abs(P_next))):
            return 0.5 * (P_next + P_next.T)
        P = P_next
    raise RiccatiDivergedError(f"no convergence after {max_iter} iterations")


def dare_residual(A, B, Q, R, P) -> float:
    """Plug-back residual of the DARE solution (should be ~0)."""
    BtPB = R + B.T @ P @ B
    res = A.T @ P @ A - P - A.T @ P @ B @ np.linalg.solve(BtPB, B.T @ P @ A) + Q
    return float(np.max(np.abs(res)))


@dataclass
class LqrWeights:
    """Diagonal weights on [u, theta, psi, q, r] + integrals, and inputs."""

    state: np.ndarray = field(default_factory=lambda: np.array([30.0, 40.0, 40.0, 2.0, 2.0]))
    integral: np.ndarray = field(default_factory=lambda: np.array([3.0, 6.0, 6.0]))
    control: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 1.0]))


@dataclass
class LqrGains:
    K: np.ndarray  # (3, 8) on [u, theta, psi, q, r, 3 integral errors]
    u_trim: np.ndarray
    dt: float
    spectral_radius: float


def lqr_synthesize(
    params: HydroParams,
    act: ActuatorParams,
    trim_surge: float = 0.5,
    dt: float = 0.1,
    weights: LqrWeights | None = None,
) -> LqrGains:
    """Integral-augmented LQR tracking surge, pitch and yaw.

    The three tracking errors are integrated as extra states; the DARE is
    solved by fixed-point iteration and the closed loop is checked to be
    strictly Schur for the nominal linearization.
    """
    weights = weights or LqrWeights()
    A_d, B_d, _, u_trim = linearize_discretize(params, act, trim_surge, dt)
    idx = list(CONTROL_STATE_IDX)
    A_c = A_d[np.ix_(idx, idx)]
    B_c = B_d[idx, :]
    # tracked outputs u, theta, psi are the first three design states
    C = np.zeros((3, 5))
    C[0, 0] = C[1, 1] = C[2, 2] = 1.0
    A_aug = np.block([[A_c, np.zeros((5, 3))], [dt * C, np.eye(3)]])
    B_aug = np.vstack([B_c, np.zeros((3, 3))])
    Q = np.diag(np.concatenate([weights.state, weights.integral]))
    R = np.diag(weights.control)
    P = solve_dare(A_aug, B_aug, Q, R)
    K = np.linalg.solve(R + B_aug.T @ P @ B_aug, B_aug.T @ P @ A_aug)
    eig = np.linalg.eigvals(A_aug - B_aug @ K)
    rho = float(np.max(np.abs(eig)))
    if rho >= 1.0:
        raise RiccatiDivergedError(f"closed loop not Schur: spectral radius {rho:.4f}")
    return LqrGains(K=K, u_trim=u_trim, dt=dt, spectral_radius=rho)


class LqrController:
    """Stateful controller: LQR feedback + anti-windup + feed-forward trims.

    The movable mass cancels the hydrostatic pitch moment at the pitch
    reference; the buoyancy engine holds its neutral trim (mismatch is
    unknown to the controller).
    """

    def __init__(self, gains: LqrGains, params: HydroParams, act: ActuatorParams):
        self.gains = gains
        self.act = act
        self.z = np.zeros(3)
        # hydrostatic pitch stiffness: restoring moment per sin(pitch)
        bg_z = params.r_g[2] - params.r_b[2]
        self._pitch_stiffness = params.weight * bg_z

    def reset(self):
        self.z[:] = 0.0

    def step(
        self,
        u_est: float,
        theta_est: float,
        psi_est: float,
        q_est: float,
        r_est: float,
        u_ref: float,
        theta_d: float,
        psi_d: float,
    ) -> ActuatorCommand:
        g = self.gains
        err = np.array(
            [
                u_est - u_ref,
                wrap_angle(theta_est - theta_d),
                wrap_angle(psi_est - psi_d),
                q_est,
                r_est,
            ]
        )
        u_fb = g.u_trim - g.K @ np.concatenate([err, self.z])
        u_sat = np.clip(u_fb, -1.0, 1.0)
        # clamping anti-windup: freeze an integrator when its thruster is
        # saturated and the error would wind it further
        thruster_of_err = (0, 2, 1)  # u->main, theta->vert, psi->diff
        dz = g.dt * err[:3]
        for i, ch in enumerate(thruster_of_err):
            if u_sat[ch] != u_fb[ch] and np.sign(dz[i]) == np.sign(self.z[i]):
                dz[i] = 0.0
        self.z += dz
        mm = 0.0
        if self.act.movable_mass_moment_max > 0:
            mm = float(
                np.clip(
                    self._pitch_stiffness * np.sin(theta_d) / self.act.movable_mass_moment_max,
                    -1.0,
                    1.0,
                )
            )
        return ActuatorCommand(thruster=u_sat, movable_mass_pos=mm, buoyancy_delta=0.0)
