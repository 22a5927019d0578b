"""Unscented Kalman filter core with quaternion-aware state charts.

States that contain a unit quaternion are handled in sigma-point space as
a 3-component rotation-vector error, so the covariance dimension is one
less than the state vector per quaternion. A chart object maps between
full states and error-space perturbations; the Euclidean chart makes the
same code exact on linear-Gaussian problems, which the tests exploit as a
closed-form Kalman oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .frames import (
    quat_multiply,
    quat_normalize,
    quat_to_rotvec,
    quat_weighted_mean,
    rotvec_to_quat,
    wrap_angle,
)


class CholeskyFailure(RuntimeError):
    """Covariance lost positive definiteness."""


@dataclass
class SigmaPointParams:
    """Unscented transform scaling; alpha per filter, beta/kappa defaults."""

    alpha: float = 1.0
    beta: float = 2.0
    kappa: float = 0.0

    def weights(self, n: int) -> tuple[float, np.ndarray, np.ndarray]:
        lam = self.alpha**2 * (n + self.kappa) - n
        c = n + lam
        wm = np.full(2 * n + 1, 1.0 / (2.0 * c))
        wc = wm.copy()
        wm[0] = lam / c
        wc[0] = lam / c + (1.0 - self.alpha**2 + self.beta)
        return c, wm, wc


class EuclideanChart:
    """Trivial chart for plain vector states."""

    def __init__(self, dim: int):
        self.dim_full = dim
        self.dim_err = dim

    def perturb(self, x: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        return x[None, :] + deltas

    def residual(self, X: np.ndarray, ref: np.ndarray) -> np.ndarray:
        return X - ref[None, :]

    def mean(self, X: np.ndarray, w: np.ndarray) -> np.ndarray:
        return w @ X

    def renormalize(self, X: np.ndarray) -> np.ndarray:
        return X


class QuatChart:
    """Chart for states holding one unit quaternion block.

    The error state replaces the 4 quaternion components with a
    3-component rotation vector applied on the left:
    ``q' = exp(delta_theta) (x) q``.
    """

    def __init__(self, dim_full: int, quat_index: int):
        self.dim_full = dim_full
        self.dim_err = dim_full - 1
        self.qi = quat_index

    def _split(self, delta: np.ndarray):
        qi = self.qi
        return delta[..., :qi], delta[..., qi : qi + 3], delta[..., qi + 3 :]

    def perturb(self, x: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        qi = self.qi
        head, dtheta, tail0 = self._split(np.atleast_2d(deltas))
        m = head.shape[0]
        X = np.empty((m, self.dim_full))
        X[:, :qi] = x[:qi] + head
        X[:, qi : qi + 4] = quat_multiply(rotvec_to_quat(dtheta), x[qi : qi + 4])
        X[:, qi + 4 :] = x[qi + 4 :] + tail0
        return X

    def residual(self, X: np.ndarray, ref: np.ndarray) -> np.ndarray:
        qi = self.qi
        m = X.shape[0]
        D = np.empty((m, self.dim_err))
        D[:, :qi] = X[:, :qi] - ref[:qi]
        q_ref_conj = ref[qi : qi + 4].copy()
        q_ref_conj[1:] *= -1.0
        D[:, qi : qi + 3] = quat_to_rotvec(quat_multiply(X[:, qi : qi + 4], q_ref_conj))
        D[:, qi + 3 :] = X[:, qi + 4 :] - ref[qi + 4 :]
        return D

    def mean(self, X: np.ndarray, w: np.ndarray) -> np.ndarray:
        qi = self.qi
        out = np.empty(self.dim_full)
        out[:qi] = w @ X[:, :qi]
        q_mean, _ = quat_weighted_mean(X[:, qi : qi + 4], w)
        out[qi : qi + 4] = q_mean
        out[qi + 4 :] = w @ X[:, qi + 4 :]
        return out

    def renormalize(self, X: np.ndarray) -> np.ndarray:
        qi = self.qi
        X[:, qi : qi + 4] = quat_normalize(X[:, qi : qi + 4])
        return X


def sigma_points(x: np.ndarray, P: np.ndarray, c: float, chart) -> np.ndarray:
    """2n+1 sigma points from the Cholesky factor of (n+lambda) P."""
    n = chart.dim_err
    try:
        A = np.linalg.cholesky(c * P)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure("covariance not positive definite") from exc
    deltas = np.vstack([np.zeros((1, n)), A.T, -A.T])
    return chart.perturb(x, deltas)


def ukf_predict(
    x: np.ndarray,
    P: np.ndarray,
    rhs,
    Q: np.ndarray,
    dt: float,
    params: SigmaPointParams,
    chart,
) -> tuple[np.ndarray, np.ndarray]:
    """One explicit-Euler prediction through the unscented transform.

    ``rhs`` maps a batch of full states (m, dim_full) to their derivatives;
    process noise enters as Q*dt on the error state.
    """
    n = chart.dim_err
    c, wm, wc = params.weights(n)
    X = sigma_points(x, P, c, chart)
    X = chart.renormalize(X + dt * rhs(X))
    x1 = chart.mean(X, wm)
    D = chart.residual(X, x1)
    P1 = (wc * D.T) @ D + Q * dt
    return x1, 0.5 * (P1 + P1.T)


def ukf_update(
    x: np.ndarray,
    P: np.ndarray,
    meas_model,
    R: np.ndarray,
    z: np.ndarray,
    params: SigmaPointParams,
    chart,
    angular: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Standard unscented measurement update.

    ``angular`` flags measurement components that live on the circle; their
    innovations are wrapped to (-pi, pi] before the gain is applied.
    Returns (state, covariance, innovation, outlier_flag); the flag marks a
    normalized innovation squared beyond the chi-square 99.9% bound without
    rejecting the measurement.
    """
    n = chart.dim_err
    c, wm, wc = params.weights(n)
    X = sigma_points(x, P, c, chart)
    Z = np.atleast_2d(meas_model(X))
    if Z.ndim == 1:
        Z = Z[:, None]
    k = Z.shape[1]
    if angular is None:
        angular = np.zeros(k, dtype=bool)
    # reference the angular components to the first sigma point so the
    # weighted mean is taken on a contiguous branch of the circle
    if angular.any():
        Z = Z.copy()
        ref = Z[0].copy()
        Z[:, angular] = ref[angular] + wrap_angle(Z[:, angular] - ref[angular])
    z_hat = wm @ Z
    dZ = Z - z_hat
    S = (wc * dZ.T) @ dZ + R
    DX = chart.residual(X, x)
    Cxz = (wc * DX.T) @ dZ
    try:
        K = np.linalg.solve(S, Cxz.T).T
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure("innovation covariance singular") from exc
    innov = np.asarray(z, dtype=float) - z_hat
    innov[angular] = wrap_angle(innov[angular])
    x1 = chart.perturb(x, (K @ innov)[None, :])[0]
    P1 = P - K @ S @ K.T
    P1 = 0.5 * (P1 + P1.T)
    nis = float(innov @ np.linalg.solve(S, innov))
    outlier = nis > chi2.ppf(0.999, df=k)
    return x1, P1, innov, outlier
