"""Jitted kernel-drift training loop.

Semantics must match drift_numpy.drift_loop exactly; the parity test in
the suite runs both on the same cell. Activation codes mirror the
constants in tangentkit.activations (keep in sync).

Hidden-unit arrays are stored transposed, (m, n) with n ~ 20, so the
forward pass, the gradient pass, and the kernel accumulation all stream
rows contiguously; the n x n accumulators live in L1.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True, nogil=True, inline="always")
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True, nogil=True, inline="always")
def _act(code, z):
    if code == 0:
        return z
    if code == 1:
        return math.tanh(z)
    if code == 2:
        return z if z > 0.0 else 0.0
    if code == 3:
        return z * _sigmoid(z)
    if code == 4:
        return max(z, 0.0) + math.log1p(math.exp(-abs(z)))
    if code == 5:
        return z * z
    return 3.0 * math.tanh(z)


@njit(cache=True, nogil=True, inline="always")
def _dact(code, z):
    if code == 0:
        return 1.0
    if code == 1:
        t = math.tanh(z)
        return 1.0 - t * t
    if code == 2:
        return 1.0 if z > 0.0 else 0.0
    if code == 3:
        s = _sigmoid(z)
        return s + z * s * (1.0 - s)
    if code == 4:
        return _sigmoid(z)
    if code == 5:
        return 2.0 * z
    t = math.tanh(z)
    return 3.0 * (1.0 - t * t)


@njit(cache=True, nogil=True)
def _forward(x, w, b, v, act_code, At, Dt, f):
    n = x.shape[0]
    m = w.shape[0]
    inv_sqrt_m = 1.0 / math.sqrt(m)
    for i in range(n):
        f[i] = 0.0
    for k in range(m):
        wk = w[k]
        bk = b[k]
        vk = v[k]
        for i in range(n):
            z = wk * x[i] + bk
            a = _act(act_code, z)
            At[k, i] = a
            Dt[k, i] = _dact(act_code, z)
            f[i] += vk * a
    for i in range(n):
        f[i] *= inv_sqrt_m


@njit(cache=True, nogil=True)
def _kernel(x, v, At, Dt, dphi, K):
    # K~_ij = phi'_i phi'_j [sum_k v_k^2 D_ik D_jk (x_i x_j + 1)
    #                        + sum_k A_ik A_jk] / m
    n = K.shape[0]
    m = At.shape[0]
    S1 = np.zeros((n, n))
    S2 = np.zeros((n, n))
    for k in range(m):
        vk2 = v[k] * v[k]
        for i in range(n):
            c1 = vk2 * Dt[k, i]
            c2 = At[k, i]
            for j in range(n):
                S1[i, j] += c1 * Dt[k, j]
                S2[i, j] += c2 * At[k, j]
    for i in range(n):
        for j in range(n):
            K[i, j] = dphi[i] * dphi[j] * (S1[i, j] * (x[i] * x[j] + 1.0) + S2[i, j]) / m


@njit(cache=True, nogil=True)
def drift_loop(
    x,
    y,
    w,
    b,
    v,
    act_code,
    out_code,
    eta,
    max_iters,
    loss_tol,
    stride,
    rec_t,
    rec_delta,
    rec_loss,
):
    n = x.shape[0]
    m = w.shape[0]
    inv_sqrt_m = 1.0 / math.sqrt(m)
    At = np.zeros((m, n))
    Dt = np.zeros((m, n))
    K0 = np.zeros((n, n))
    K = np.zeros((n, n))
    f = np.zeros(n)
    dphi = np.zeros(n)
    r = np.zeros(n)
    G = np.zeros(n)
    Gx = np.zeros(n)
    k0_norm = 0.0
    n_rec = 0
    status = 1
    t = 0
    while True:
        _forward(x, w, b, v, act_code, At, Dt, f)
        loss = 0.0
        for i in range(n):
            g = _act(out_code, f[i])
            dphi[i] = _dact(out_code, f[i])
            r[i] = g - y[i]
            loss += 0.5 * r[i] * r[i]

        diverged = not math.isfinite(loss) or loss > 1e12
        converged = loss < loss_tol
        final = converged or diverged or t >= max_iters
        if final or t % stride == 0:
            if t == 0:
                _kernel(x, v, At, Dt, dphi, K0)
                acc = 0.0
                for i in range(n):
                    for j in range(n):
                        acc += K0[i, j] * K0[i, j]
                k0_norm = math.sqrt(acc)
                delta = 0.0
            else:
                _kernel(x, v, At, Dt, dphi, K)
                acc = 0.0
                for i in range(n):
                    for j in range(n):
                        d = K[i, j] - K0[i, j]
                        acc += d * d
                delta = math.sqrt(acc) / max(k0_norm, 1e-300)
            rec_t[n_rec] = t
            rec_delta[n_rec] = delta
            rec_loss[n_rec] = loss
            n_rec += 1
        if final:
            if converged:
                status = 0
            elif diverged:
                status = 2
            else:
                status = 1
            break

        # gradient of 0.5 ||phi(f) - y||^2 through the shallow net
        for i in range(n):
            G[i] = r[i] * dphi[i]
            Gx[i] = G[i] * x[i]
        for k in range(m):
            sw = 0.0
            sb = 0.0
            gv = 0.0
            for i in range(n):
                sw += Gx[i] * Dt[k, i]
                sb += G[i] * Dt[k, i]
                gv += G[i] * At[k, i]
            w[k] -= eta * v[k] * sw * inv_sqrt_m
            b[k] -= eta * v[k] * sb * inv_sqrt_m
            v[k] -= eta * gv * inv_sqrt_m
        t += 1
    return n_rec, status, t
