"""Finite-difference oracles.

These are the independent verification route for every hand-derived
derivative in the package: central differences with a step proportional to
the parameter magnitude (floor 1e-7), which balances truncation against
round-off at double precision. They are deliberately written against the
public evaluate/jacobian surface only, so they share no code with the
analytic paths they check.
"""

from __future__ import annotations

import numpy as np

from .base import SmoothSystem

__all__ = [
    "fd_steps",
    "fd_jacobian",
    "fd_hessian_output",
    "fd_loss_gradient",
    "fd_loss_hessian",
]

REL_STEP = 1e-5
STEP_FLOOR = 1e-7
# Pure second differences divide by h^2, so their round-off floor is
# eps/h^2; the larger step rebalances it against the h^2 truncation term.
REL_STEP2 = 1e-4
STEP_FLOOR2 = 1e-6


def fd_steps(w: np.ndarray) -> np.ndarray:
    return np.maximum(REL_STEP * np.abs(w), STEP_FLOOR)


def fd_jacobian(system: SmoothSystem, w: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian, shape (n, m)."""
    w = np.asarray(w, dtype=np.float64)
    h = fd_steps(w)
    cols = []
    for j in range(system.n_params):
        wp = w.copy()
        wm = w.copy()
        wp[j] += h[j]
        wm[j] -= h[j]
        cols.append((system.evaluate(wp) - system.evaluate(wm)) / (2.0 * h[j]))
    return np.stack(cols, axis=1)


def fd_hessian_output(system: SmoothSystem, w: np.ndarray, index: int) -> np.ndarray:
    """Dense central-difference Hessian of output ``index``, shape (m, m).

    Uses function values only (the four-point stencil), so it is
    independent of both the analytic Jacobian and the analytic HVP.
    """
    w = np.asarray(w, dtype=np.float64)
    m = system.n_params
    h = np.maximum(REL_STEP2 * np.abs(w), STEP_FLOOR2)
    f = lambda v: float(system.evaluate(v)[index])
    H = np.empty((m, m))
    for j in range(m):
        for k in range(j, m):
            wpp = w.copy(); wpp[j] += h[j]; wpp[k] += h[k]
            wpm = w.copy(); wpm[j] += h[j]; wpm[k] -= h[k]
            wmp = w.copy(); wmp[j] -= h[j]; wmp[k] += h[k]
            wmm = w.copy(); wmm[j] -= h[j]; wmm[k] -= h[k]
            H[j, k] = (f(wpp) - f(wpm) - f(wmp) + f(wmm)) / (4.0 * h[j] * h[k])
            H[k, j] = H[j, k]
    return H


def _loss(system: SmoothSystem, w: np.ndarray, y: np.ndarray) -> float:
    r = system.evaluate(w) - y
    return 0.5 * float(r @ r)


def fd_loss_gradient(system: SmoothSystem, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Central-difference gradient of the square loss, shape (m,)."""
    w = np.asarray(w, dtype=np.float64)
    h = fd_steps(w)
    g = np.empty(system.n_params)
    for j in range(system.n_params):
        wp = w.copy()
        wm = w.copy()
        wp[j] += h[j]
        wm[j] -= h[j]
        g[j] = (_loss(system, wp, y) - _loss(system, wm, y)) / (2.0 * h[j])
    return g


def fd_loss_hessian(system: SmoothSystem, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Dense loss Hessian via central differences of the analytic gradient.

    The analytic gradient is J^T r (jacobian route), which shares no code
    with weighted_loss_hvp, so this is a valid independent check for it.
    """
    w = np.asarray(w, dtype=np.float64)
    m = system.n_params
    h = fd_steps(w)
    grad = lambda v: system.vjp(v, system.evaluate(v) - y)
    H = np.empty((m, m))
    for j in range(m):
        wp = w.copy()
        wm = w.copy()
        wp[j] += h[j]
        wm[j] -= h[j]
        H[:, j] = (grad(wp) - grad(wm)) / (2.0 * h[j])
    return 0.5 * (H + H.T)
