"""Numba-compiled kernels for the per-step simulation hot path.

These fuse the sigma-point pipelines, vehicle dynamics and sensor error
steps into single compiled calls. They are numerically equivalent to the
plain-numpy reference implementations in :mod:`auvgnc.ukf`,
:mod:`auvgnc.plant` and :mod:`auvgnc.filters` (the tests assert this);
only the production episode loop routes through them.

All quaternion conventions match :mod:`auvgnc.frames`: scalar-first,
body-to-NED, left perturbation by rotation vectors.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _qmult(p, q):
    out = np.empty(4)
    out[0] = p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3]
    out[1] = p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2]
    out[2] = p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1]
    out[3] = p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]
    return out


@njit(cache=True)
def _qnormalize(q):
    n = np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return q / n


@njit(cache=True)
def _q_to_dcm(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    C = np.empty((3, 3))
    C[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    C[0, 1] = 2.0 * (x * y - w * z)
    C[0, 2] = 2.0 * (x * z + w * y)
    C[1, 0] = 2.0 * (x * y + w * z)
    C[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    C[1, 2] = 2.0 * (y * z - w * x)
    C[2, 0] = 2.0 * (x * z - w * y)
    C[2, 1] = 2.0 * (y * z + w * x)
    C[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return C


@njit(cache=True)
def _rotvec_to_quat(rv):
    angle = np.sqrt(rv[0] * rv[0] + rv[1] * rv[1] + rv[2] * rv[2])
    out = np.empty(4)
    half = 0.5 * angle
    if angle < 1e-10:
        k = 0.5 - angle * angle / 48.0
    else:
        k = np.sin(half) / angle
    out[0] = np.cos(half)
    out[1] = k * rv[0]
    out[2] = k * rv[1]
    out[3] = k * rv[2]
    return out


@njit(cache=True)
def _quat_to_rotvec(q):
    qc = q.copy()
    if qc[0] < 0.0:
        qc = -qc
    vec_norm = np.sqrt(qc[1] * qc[1] + qc[2] * qc[2] + qc[3] * qc[3])
    w = min(max(qc[0], -1.0), 1.0)
    angle = 2.0 * np.arctan2(vec_norm, w)
    if vec_norm < 1e-10:
        scale = 2.0
    else:
        scale = angle / vec_norm
    return scale * qc[1:4]


@njit(cache=True)
def _wrap(a):
    return np.pi - (np.pi - a) % (2.0 * np.pi)


@njit(cache=True)
def _quat_mean(Q, w):
    """Iterative chart mean of rows of Q with weights w."""
    i_best = 0
    w_best = w[0]
    for i in range(1, w.shape[0]):
        if w[i] > w_best:
            w_best = w[i]
            i_best = i
    mean = _qnormalize(Q[i_best].copy())
    for _ in range(50):
        delta = np.zeros(3)
        conj = np.empty(4)
        conj[0] = mean[0]
        conj[1] = -mean[1]
        conj[2] = -mean[2]
        conj[3] = -mean[3]
        for i in range(Q.shape[0]):
            err = _quat_to_rotvec(_qmult(Q[i], conj))
            delta += w[i] * err
        mean = _qnormalize(_qmult(_rotvec_to_quat(delta), mean))
        if delta[0] ** 2 + delta[1] ** 2 + delta[2] ** 2 < 1e-20:
            break
    return mean


@njit(cache=True)
def sigma_points_quat(x, P, c, qi):
    """2n+1 sigma points for a state with one quaternion at index qi."""
    n = P.shape[0]
    nf = n + 1
    A = np.linalg.cholesky(c * P)
    X = np.empty((2 * n + 1, nf))
    for m in range(2 * n + 1):
        if m == 0:
            delta = np.zeros(n)
        elif m <= n:
            delta = A[:, m - 1].copy()
        else:
            delta = -A[:, m - n - 1]
        for j in range(qi):
            X[m, j] = x[j] + delta[j]
        dq = _rotvec_to_quat(delta[qi : qi + 3])
        X[m, qi : qi + 4] = _qmult(dq, x[qi : qi + 4])
        for j in range(qi + 4, nf):
            X[m, j] = x[j] + delta[j - 1]
    return X


@njit(cache=True)
def mean_cov_quat(X, wm, wc, Q_dt, qi):
    """Weighted mean and chart covariance of propagated sigma points."""
    m, nf = X.shape
    n = nf - 1
    x1 = np.zeros(nf)
    for j in range(qi):
        s = 0.0
        for i in range(m):
            s += wm[i] * X[i, j]
        x1[j] = s
    x1[qi : qi + 4] = _quat_mean(X[:, qi : qi + 4], wm)
    for j in range(qi + 4, nf):
        s = 0.0
        for i in range(m):
            s += wm[i] * X[i, j]
        x1[j] = s
    D = np.empty((m, n))
    conj = np.empty(4)
    conj[0] = x1[qi]
    conj[1] = -x1[qi + 1]
    conj[2] = -x1[qi + 2]
    conj[3] = -x1[qi + 3]
    for i in range(m):
        for j in range(qi):
            D[i, j] = X[i, j] - x1[j]
        rv = _quat_to_rotvec(_qmult(X[i, qi : qi + 4], conj))
        D[i, qi] = rv[0]
        D[i, qi + 1] = rv[1]
        D[i, qi + 2] = rv[2]
        for j in range(qi + 4, nf):
            D[i, j - 1] = X[i, j] - x1[j]
    P1 = Q_dt.copy()
    for i in range(m):
        for a in range(n):
            wda = wc[i] * D[i, a]
            for b in range(n):
                P1[a, b] += wda * D[i, b]
    return x1, 0.5 * (P1 + P1.T)


@njit(cache=True)
def update_core(x, P, X, Z, R, z, wm, wc, qi, angular):
    """Unscented measurement update from precomputed sigma measurements."""
    m, k = Z.shape
    nf = x.shape[0]
    n = nf - 1
    Zw = Z.copy()
    for j in range(k):
        if angular[j]:
            ref = Z[0, j]
            for i in range(m):
                Zw[i, j] = ref + _wrap(Z[i, j] - ref)
    z_hat = np.zeros(k)
    for j in range(k):
        for i in range(m):
            z_hat[j] += wm[i] * Zw[i, j]
    dZ = Zw - z_hat
    S = R.copy()
    for i in range(m):
        for a in range(k):
            wda = wc[i] * dZ[i, a]
            for b in range(k):
                S[a, b] += wda * dZ[i, b]
    D = np.empty((m, n))
    conj = np.empty(4)
    conj[0] = x[qi]
    conj[1] = -x[qi + 1]
    conj[2] = -x[qi + 2]
    conj[3] = -x[qi + 3]
    for i in range(m):
        for j in range(qi):
            D[i, j] = X[i, j] - x[j]
        rv = _quat_to_rotvec(_qmult(X[i, qi : qi + 4], conj))
        D[i, qi] = rv[0]
        D[i, qi + 1] = rv[1]
        D[i, qi + 2] = rv[2]
        for j in range(qi + 4, nf):
            D[i, j - 1] = X[i, j] - x[j]
    Cxz = np.zeros((n, k))
    for i in range(m):
        for a in range(n):
            wda = wc[i] * D[i, a]
            for b in range(k):
                Cxz[a, b] += wda * dZ[i, b]
    K = np.linalg.solve(S, Cxz.T).T
    innov = np.empty(k)
    for j in range(k):
        innov[j] = _wrap(z[j] - z_hat[j]) if angular[j] else z[j] - z_hat[j]
    corr = K @ innov
    x1 = np.empty(nf)
    for j in range(qi):
        x1[j] = x[j] + corr[j]
    dq = _rotvec_to_quat(corr[qi : qi + 3])
    x1[qi : qi + 4] = _qmult(dq, x[qi : qi + 4])
    for j in range(qi + 4, nf):
        x1[j] = x[j] + corr[j - 1]
    P1 = P - K @ S @ K.T
    nis = innov @ np.linalg.solve(S, innov)
    return x1, 0.5 * (P1 + P1.T), innov, nis


@njit(cache=True)
def sins_rhs_batch(X, f_meas, w_meas, gz):
    """Strapdown derivative over sigma points; layout [nu1, eta1, q, ba, bg]."""
    m = X.shape[0]
    out = np.zeros_like(X)
    for i in range(m):
        q = X[i, 6:10]
        C = _q_to_dcm(q)
        for j in range(3):
            out[i, j] = f_meas[j] - X[i, 10 + j] + C[2, j] * gz
        for j in range(3):
            out[i, 3 + j] = C[j, 0] * X[i, 0] + C[j, 1] * X[i, 1] + C[j, 2] * X[i, 2]
        wb = np.empty(4)
        wb[0] = 0.0
        wb[1] = w_meas[0] - X[i, 13]
        wb[2] = w_meas[1] - X[i, 14]
        wb[3] = w_meas[2] - X[i, 15]
        out[i, 6:10] = 0.5 * _qmult(q, wb)
    return out


@njit(cache=True)
def _fossen_nu_dot(nu, q, v_c_n, tau, M_rb, M_a, M_inv, D, W, Bf, r_g, r_b):
    C = _q_to_dcm(q)
    v_c_b = C.T @ v_c_n
    nu_r = nu.copy()
    for j in range(3):
        nu_r[j] -= v_c_b[j]
    rhs = tau - D @ nu_r

    # C_rb(nu) nu
    p1 = M_rb[0:3, 0:3] @ nu[0:3] + M_rb[0:3, 3:6] @ nu[3:6]
    p2 = M_rb[3:6, 0:3] @ nu[0:3] + M_rb[3:6, 3:6] @ nu[3:6]
    rhs[0:3] -= np.cross(nu[3:6], p1)
    rhs[3:6] -= np.cross(nu[0:3], p1) + np.cross(nu[3:6], p2)
    # C_a(nu_r) nu_r
    p1 = M_a[0:3, 0:3] @ nu_r[0:3] + M_a[0:3, 3:6] @ nu_r[3:6]
    p2 = M_a[3:6, 0:3] @ nu_r[0:3] + M_a[3:6, 3:6] @ nu_r[3:6]
    rhs[0:3] -= np.cross(nu_r[3:6], p1)
    rhs[3:6] -= np.cross(nu_r[0:3], p1) + np.cross(nu_r[3:6], p2)
    # restoring forces (g(eta), already moved to this side)
    fw = C[2, :] * W
    fb = C[2, :] * (-Bf)
    rhs[0:3] += fw + fb
    rhs[3:6] += np.cross(r_g, fw) + np.cross(r_b, fb)
    return M_inv @ rhs


@njit(cache=True)
def hmm_rhs_batch(X, tau, M_rb, M_a, M_inv, D, W, Bf, r_g, r_b):
    """Hydrodynamic derivative over sigma points; [nu, eta1, q, uc, vc]."""
    m = X.shape[0]
    out = np.zeros_like(X)
    v_c = np.zeros(3)
    for i in range(m):
        q = X[i, 9:13]
        v_c[0] = X[i, 13]
        v_c[1] = X[i, 14]
        nu = X[i, 0:6]
        out[i, 0:6] = _fossen_nu_dot(nu, q, v_c, tau, M_rb, M_a, M_inv, D, W, Bf, r_g, r_b)
        C = _q_to_dcm(q)
        for j in range(3):
            out[i, 6 + j] = C[j, 0] * nu[0] + C[j, 1] * nu[1] + C[j, 2] * nu[2]
        wq = np.empty(4)
        wq[0] = 0.0
        wq[1] = nu[3]
        wq[2] = nu[4]
        wq[3] = nu[5]
        out[i, 9:13] = 0.5 * _qmult(q, wq)
    return out


@njit(cache=True)
def renormalize_quat_rows(X, qi):
    for i in range(X.shape[0]):
        X[i, qi : qi + 4] = _qnormalize(X[i, qi : qi + 4])
    return X


@njit(cache=True)
def mag_h(X, m_n, qi):
    m = X.shape[0]
    Z = np.empty((m, 3))
    for i in range(m):
        C = _q_to_dcm(X[i, qi : qi + 4])
        for j in range(3):
            Z[i, j] = C[0, j] * m_n[0] + C[1, j] * m_n[1] + C[2, j] * m_n[2]
    return Z


@njit(cache=True)
def euler_h(X, qi):
    """Euler angles of the quaternion block; flags gimbal lock."""
    m = X.shape[0]
    Z = np.empty((m, 3))
    locked = False
    for i in range(m):
        q = _qnormalize(X[i, qi : qi + 4])
        w, x, y, z = q[0], q[1], q[2], q[3]
        sp = -2.0 * (x * z - w * y)
        sp = min(max(sp, -1.0), 1.0)
        pitch = np.arcsin(sp)
        if abs(abs(pitch) - 0.5 * np.pi) < 1e-6:
            locked = True
        Z[i, 0] = np.arctan2(2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y))
        Z[i, 1] = pitch
        Z[i, 2] = np.arctan2(2.0 * (x * y + w * z), 1.0 - 2.0 * (y * y + z * z))
    return Z, locked


@njit(cache=True)
def plant_rk4(x, tau, v_c_n, M_rb, M_a, M_inv, D, W, Bf, r_g, r_b, dt):
    """RK4 step of the truth dynamics on [nu(6), eta1(3), q(4)]."""

    def deriv(xs):
        out = np.empty(13)
        nu = xs[0:6]
        q = xs[9:13]
        out[0:6] = _fossen_nu_dot(nu, q, v_c_n, tau, M_rb, M_a, M_inv, D, W, Bf, r_g, r_b)
        C = _q_to_dcm(q)
        for j in range(3):
            out[6 + j] = C[j, 0] * nu[0] + C[j, 1] * nu[1] + C[j, 2] * nu[2]
        wq = np.empty(4)
        wq[0] = 0.0
        wq[1] = nu[3]
        wq[2] = nu[4]
        wq[3] = nu[5]
        out[9:13] = 0.5 * _qmult(q, wq)
        return out

    k1 = deriv(x)
    k2 = deriv(x + 0.5 * dt * k1)
    k3 = deriv(x + 0.5 * dt * k2)
    k4 = deriv(x + dt * k3)
    x1 = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    x1[9:13] = _qnormalize(x1[9:13])
    return x1


@njit(cache=True)
def mahony_full_step(q, bias, f_meas, w_meas, m_meas, field_dir_n, k_p, k_i, k1, k2, dt):
    """Mahony step fusing accelerometer and magnetometer directions."""
    C_nb = _q_to_dcm(q).T
    e = np.zeros(3)
    f_norm = np.sqrt(f_meas[0] ** 2 + f_meas[1] ** 2 + f_meas[2] ** 2)
    if f_norm > 1e-9:
        a_meas = f_meas / f_norm
        v_acc = np.empty(3)
        for j in range(3):
            v_acc[j] = -C_nb[j, 2]
        e += k1 * np.cross(a_meas, v_acc)
    m_norm = np.sqrt(m_meas[0] ** 2 + m_meas[1] ** 2 + m_meas[2] ** 2)
    if m_norm > 1e-9 and k2 > 0.0:
        v_mag = C_nb @ field_dir_n
        e += k2 * np.cross(m_meas / m_norm, v_mag)
    bias1 = bias - k_i * e * dt
    omega = w_meas - bias1 + k_p * e
    wq = np.empty(4)
    wq[0] = 0.0
    wq[1] = omega[0]
    wq[2] = omega[1]
    wq[3] = omega[2]
    q1 = _qnormalize(q + dt * 0.5 * _qmult(q, wq))
    return q1, bias1


@njit(cache=True)
def imu_sample_kernel(
    nu1_dot, q, nu2, gz, b_on_a, b_on_g,
    z_b_a, z_k_a, Na, Ba, Ka, Ta,
    z_b_g, z_k_g, Ng, Bg, Kg, Tg,
    qstep_a, qstep_g, dt, noise_a, noise_g,
):
    """Specific force + rate sample with Gauss-Markov errors, quantized."""
    C = _q_to_dcm(q)
    ea = gm_step3(z_b_a, z_k_a, Na, Ba, Ka, Ta, dt, noise_a)
    eg = gm_step3(z_b_g, z_k_g, Ng, Bg, Kg, Tg, dt, noise_g)
    f = np.empty(3)
    w = np.empty(3)
    for j in range(3):
        f[j] = nu1_dot[j] - C[2, j] * gz + b_on_a[j] + ea[j]
        w[j] = nu2[j] + b_on_g[j] + eg[j]
        if qstep_a > 0.0:
            f[j] = np.round(f[j] / qstep_a) * qstep_a
        if qstep_g > 0.0:
            w[j] = np.round(w[j] / qstep_g) * qstep_g
    return f, w


@njit(cache=True)
def mag_sample_kernel(q, field_n, z_b, z_k, N, B, K, T, qstep, dt, noise):
    """Body-frame field sample with Gauss-Markov errors, quantized."""
    C = _q_to_dcm(q)
    e = gm_step3(z_b, z_k, N, B, K, T, dt, noise)
    m = np.empty(3)
    for j in range(3):
        m[j] = C[0, j] * field_n[0] + C[1, j] * field_n[1] + C[2, j] * field_n[2] + e[j]
        if qstep > 0.0:
            m[j] = np.round(m[j] / qstep) * qstep
    return m


@njit(cache=True)
def gm_step3(z_b, z_k, N, B, K, corr_time, dt, noise):
    """Vector Gauss-Markov error step; mutates z_b, z_k in place."""
    n = z_b.shape[0]
    err = np.empty(n)
    sq = np.sqrt(dt)
    for j in range(n):
        if corr_time > 0.0:
            drive = B[j] * np.sqrt(2.0 / corr_time)
            z_b[j] += dt * (-z_b[j] / corr_time) + sq * drive * noise[1, j]
        z_k[j] += K[j] * sq * noise[2, j]
        err[j] = N[j] / sq * noise[0, j] + z_b[j] + z_k[j]
    return err
