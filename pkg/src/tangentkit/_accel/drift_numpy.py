"""Pure-numpy kernel-drift training loop.

Vectorized fallback with the same call signature and record semantics as
drift_numba.drift_loop. Kept separate from the jitted code on purpose:
the loop bodies differ (BLAS matmuls here, explicit loops there), and
the parity test compares their outputs on a shared cell.
"""

from __future__ import annotations

import numpy as np

from ..activations import Activation, get_activation

_BY_CODE: dict[int, Activation] = {
    get_activation(kind).code: get_activation(kind)
    for kind in (
        "identity",
        "tanh",
        "relu",
        "swish",
        "softplus",
        "quadratic",
        "scaled-tanh-3",
    )
}


def _kernel(x, v, A, D, dphi):
    P = D * v[None, :]
    m = A.shape[1]
    base = (P @ P.T) * (np.outer(x, x) + 1.0) + A @ A.T
    return (dphi[:, None] * dphi[None, :]) * base / m


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
    act = _BY_CODE[act_code]
    out = _BY_CODE[out_code]
    inv_sqrt_m = 1.0 / np.sqrt(w.shape[0])
    K0 = None
    k0_norm = 0.0
    n_rec = 0
    status = 1
    t = 0
    while True:
        Z = np.outer(x, w) + b[None, :]
        A = act.fn(Z)
        D = act.deriv(Z)
        f = A @ v * inv_sqrt_m
        g = out.fn(f)
        dphi = out.deriv(f)
        r = g - y
        loss = float(0.5 * (r @ r))

        diverged = not np.isfinite(loss) or loss > 1e12
        converged = loss < loss_tol
        final = converged or diverged or t >= max_iters
        if final or t % stride == 0:
            if t == 0:
                K0 = _kernel(x, v, A, D, dphi)
                k0_norm = float(np.linalg.norm(K0))
                delta = 0.0
            else:
                K = _kernel(x, v, A, D, dphi)
                delta = float(np.linalg.norm(K - K0)) / max(k0_norm, 1e-300)
            rec_t[n_rec] = t
            rec_delta[n_rec] = delta
            rec_loss[n_rec] = loss
            n_rec += 1
        if final:
            status = 0 if converged else (2 if diverged else 1)
            break

        G = r * dphi
        gw = v * ((x * G) @ D)
        gb = v * (G @ D)
        gv = G @ A
        w -= eta * gw * inv_sqrt_m
        b -= eta * gb * inv_sqrt_m
        v -= eta * gv * inv_sqrt_m
        t += 1
    return n_rec, status, t
