"""Quaternion and rotation utilities shared by the plant, sensors and filters.

Conventions used throughout the package:

- Quaternions are scalar-first numpy arrays ``[eta, eps1, eps2, eps3]`` and
  represent the body-to-NED rotation ``q_b^n``; ``v_n = C(q) v_b``.
- Euler angles follow the zyx (yaw-pitch-roll) convention: roll ``phi``,
  pitch ``theta``, yaw ``psi``, all in radians.
- Body angular rate ``omega`` drives the kinematics ``qdot = 1/2 q (x) (0, omega)``.

Most functions broadcast over a leading batch axis so the sigma-point code
can push all points through in one call.
"""

from __future__ import annotations

import numpy as np


class GimbalLockError(ValueError):
    """Pitch too close to +-pi/2 for a well-defined Euler decomposition."""


class QuatMeanNonConvergence(RuntimeWarning):
    """Iterative quaternion mean hit the iteration cap."""


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Normalize to unit length (broadcasts over leading axes)."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / n


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Normalize and resolve the double cover by forcing eta >= 0."""
    q = quat_normalize(q)
    sign = np.where(q[..., :1] < 0.0, -1.0, 1.0)
    return q * sign


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product p (x) q, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def quat_to_dcm(q: np.ndarray) -> np.ndarray:
    """Rotation matrix C_b^n from a body-to-NED quaternion.

    Broadcasts: input (..., 4) gives (..., 3, 3). The matrix is orthogonal
    with det +1; C_n^b is its transpose.
    """
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    row0 = np.stack([1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)], axis=-1)
    row1 = np.stack([2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)], axis=-1)
    row2 = np.stack([2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def euler_to_quat(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """zyx Euler angles to a canonical unit quaternion."""
    cr, sr = np.cos(0.5 * roll), np.sin(0.5 * roll)
    cp, sp = np.cos(0.5 * pitch), np.sin(0.5 * pitch)
    cy, sy = np.cos(0.5 * yaw), np.sin(0.5 * yaw)
    q = np.array(
        [
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        ]
    )
    return quat_canonical(q)


def quat_to_euler(q: np.ndarray) -> np.ndarray:
    """Quaternion to zyx Euler angles [roll, pitch, yaw].

    Broadcasts over leading axes. Raises :class:`GimbalLockError` when any
    pitch is within 1e-6 rad of +-pi/2.
    """
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    sin_pitch = np.clip(-2.0 * (x * z - w * y), -1.0, 1.0)
    pitch = np.arcsin(sin_pitch)
    if np.any(np.abs(np.abs(pitch) - 0.5 * np.pi) < 1e-6):
        raise GimbalLockError("pitch within 1e-6 rad of +-pi/2")
    roll = np.arctan2(2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y))
    yaw = np.arctan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (y * y + z * z))
    return np.stack([roll, pitch, yaw], axis=-1)


def quat_kinematics_rhs(q: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Quaternion derivative qdot = 1/2 q (x) (0, omega) for body rate omega.

    Broadcasts over leading axes; the result is tangent to the unit sphere
    (<q, qdot> = 0) for unit q.
    """
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    pure = np.concatenate([np.zeros(omega.shape[:-1] + (1,)), omega], axis=-1)
    return 0.5 * quat_multiply(q, pure)


def angular_rate_transform(q: np.ndarray) -> np.ndarray:
    """4x3 matrix T(q) with T(q) @ omega == quat_kinematics_rhs(q, omega)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q
    return 0.5 * np.array(
        [
            [-x, -y, -z],
            [w, -z, y],
            [z, w, -x],
            [-y, x, w],
        ]
    )


def rotvec_to_quat(rv: np.ndarray) -> np.ndarray:
    """Exponential map: rotation vector (rad) to unit quaternion, batched."""
    rv = np.asarray(rv, dtype=float)
    angle = np.linalg.norm(rv, axis=-1, keepdims=True)
    half = 0.5 * angle
    # series fallback keeps sin(x)/x well-defined at zero
    small = angle < 1e-10
    k = np.where(small, 0.5 - angle**2 / 48.0, np.sin(half) / np.where(small, 1.0, angle))
    return np.concatenate([np.cos(half), k * rv], axis=-1)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Logarithmic map: unit quaternion to rotation vector in (-pi, pi]^3."""
    q = quat_canonical(q)
    vec_norm = np.linalg.norm(q[..., 1:], axis=-1, keepdims=True)
    w = np.clip(q[..., :1], -1.0, 1.0)
    angle = 2.0 * np.arctan2(vec_norm, w)
    small = vec_norm < 1e-10
    scale = np.where(small, 2.0, angle / np.where(small, 1.0, vec_norm))
    return scale * q[..., 1:]


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]; idempotent and elementwise."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)


def quat_weighted_mean(
    quats: np.ndarray,
    weights: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> tuple[np.ndarray, bool]:
    """Weighted mean of unit quaternions via rotation-vector chart iteration.

    The weights must sum to one; a negative zeroth weight (as produced by
    unscented mean weights) is accepted. Each iteration rotates all inputs
    into the tangent space of the current estimate, averages the rotation
    vectors and applies the correction, until the correction norm drops
    below ``tol``.

    Returns ``(mean, converged)``; on hitting ``max_iter`` the best iterate
    is returned with ``converged=False``.
    """
    quats = np.asarray(quats, dtype=float)
    weights = np.asarray(weights, dtype=float)
    mean = quat_normalize(quats[np.argmax(weights)])
    for _ in range(max_iter):
        err = quat_to_rotvec(quat_multiply(quats, quat_conjugate(mean)))
        delta = weights @ err
        mean = quat_normalize(quat_multiply(rotvec_to_quat(delta), mean))
        if np.dot(delta, delta) < tol * tol:
            return mean, True
    return mean, False
