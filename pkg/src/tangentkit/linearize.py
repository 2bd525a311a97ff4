"""Linearized dynamics and their divergence from the true ones.

F^lin freezes the Jacobian at w0: F^lin(w) = F(w0) + J(w0)(w - w0).
Running GD on both systems from the same start with the same step gives
the two series compared here: the accumulated output gap
||F(w_t) - F^lin(w_t^lin)|| and the per-update gap between consecutive
output increments. The sufficient condition for the two to stay close
couples the ball Hessian supremum to the kernel conditioning:

    sup ||H||  <=  epsilon * mu / (2 L_F sqrt(n) R ||F(w0) - y||)

with R = 2 L_F ||F(w0) - y|| / mu, which the report evaluates with
sampled constants (exact hooks when the family has them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .hessian import _ball_hessian_sup
from .numerics import sample_in_ball
from .systems import SmoothSystem
from .conditioning import tangent_kernel

__all__ = ["LinearizedSystem", "DivergenceReport", "linearize_at", "compare_dynamics"]


class LinearizedSystem(SmoothSystem):
    """First-order model of a system around an anchor point."""

    def __init__(self, anchor_w: np.ndarray, F0: np.ndarray, J0: np.ndarray):
        self.anchor_w = np.asarray(anchor_w, dtype=np.float64).copy()
        self.F0 = np.asarray(F0, dtype=np.float64).copy()
        self.J0 = np.asarray(J0, dtype=np.float64).copy()
        self.n_outputs, self.n_params = self.J0.shape
        self.activation = None

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        w = self.check_params(w)
        return self.F0 + self.J0 @ (w - self.anchor_w)

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        self.check_params(w)
        return self.J0

    def hvp_per_output(self, w: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        if not 0 <= index < self.n_outputs:
            raise ContractError(f"output index {index} out of range [0, {self.n_outputs})")
        return np.zeros(self.n_params)

    def tangent_gram(self, w: np.ndarray) -> np.ndarray:
        self.check_params(w)
        return self.J0 @ self.J0.T

    def exact_hessian_tensor_norm(self) -> float:
        return 0.0

    def exact_ball_lipschitz(self, w0: np.ndarray, radius: float) -> float:
        return float(np.linalg.svd(self.J0, compute_uv=False)[0])


def linearize_at(system: SmoothSystem, w0: np.ndarray) -> LinearizedSystem:
    """Capture F(w0) and J(w0) into a standalone linear model."""
    w0 = np.asarray(w0, dtype=np.float64)
    return LinearizedSystem(w0, system.evaluate(w0), system.jacobian(w0))


@dataclass(frozen=True)
class DivergenceReport:
    """Aligned nonlinear-vs-linearized GD comparison.

    gap[t] = ||F(w_t) - F^lin(w_t^lin)|| (zero at t=0); update_gap[t] is
    the difference of the t-th output increments; condition_satisfied
    states whether hessian_sup <= condition_threshold held.
    """

    t: np.ndarray
    gap: np.ndarray
    update_gap: np.ndarray
    loss_nonlinear: np.ndarray
    loss_linearized: np.ndarray
    sup_gap: float
    hessian_sup: float
    condition_threshold: float
    condition_satisfied: bool
    epsilon: float
    mu: float
    radius: float
    L_F: float


def compare_dynamics(
    system: SmoothSystem,
    w0: np.ndarray,
    targets: np.ndarray,
    step: float,
    iters: int,
    epsilon: float = 0.1,
    mu: float | None = None,
    seed: int = 0,
    sup_samples: int = 16,
) -> DivergenceReport:
    """Run GD on F and on F^lin from w0 with one step size, report the gaps.

    Both trajectories run the full `iters` iterations (no early stopping,
    so the series stay aligned); only non-finite values truncate. mu
    defaults to half the smallest kernel eigenvalue at w0.
    """
    if step <= 0:
        raise ContractError(f"step must be positive, got {step}")
    if iters < 0:
        raise ContractError(f"iters must be >= 0, got {iters}")
    w0 = np.asarray(w0, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    lin = linearize_at(system, w0)

    w = w0.copy()
    w_lin = w0.copy()
    ts, gaps, update_gaps = [], [], []
    loss_nl, loss_li = [], []
    F_prev = None
    Fl_prev = None
    for t in range(iters + 1):
        F = system.evaluate(w)
        Fl = lin.evaluate(w_lin)
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(Fl))):
            break
        ts.append(t)
        gaps.append(float(np.linalg.norm(F - Fl)))
        loss_nl.append(0.5 * float((F - targets) @ (F - targets)))
        loss_li.append(0.5 * float((Fl - targets) @ (Fl - targets)))
        if F_prev is not None:
            update_gaps.append(float(np.linalg.norm((F - F_prev) - (Fl - Fl_prev))))
        F_prev, Fl_prev = F, Fl
        if t == iters:
            break
        w = w - step * system.vjp(w, F - targets)
        w_lin = w_lin - step * lin.vjp(w_lin, Fl - targets)

    if mu is None:
        mu = tangent_kernel(system, w0).lambda_min / 2.0
    res_norm = float(np.linalg.norm(system.evaluate(w0) - targets))
    n = system.n_outputs

    lip = system.exact_ball_lipschitz(w0, 1.0)
    if lip is None:
        # L_F and R depend on each other; one resampling pass settles it
        radius = 1.0
        for _ in range(2):
            rng = np.random.default_rng(seed)
            lip = 0.0
            for p in [w0] + list(sample_in_ball(w0, radius, sup_samples, rng)):
                lip = max(lip, float(np.linalg.svd(system.jacobian(p), compute_uv=False)[0]))
            radius = 2.0 * lip * res_norm / mu if mu > 0 else radius
    else:
        lip = system.exact_ball_lipschitz(w0, 2.0 * lip * res_norm / mu) if mu > 0 else lip
        radius = 2.0 * lip * res_norm / mu if mu > 0 else 1.0

    h_sup = _ball_hessian_sup(system, w0, max(radius, 1e-12), sup_samples, seed + 5)
    if res_norm == 0.0:
        # already interpolating: both trajectories are constant
        threshold = math.inf
    elif mu > 0 and math.isfinite(radius) and radius > 0 and lip > 0:
        threshold = epsilon * mu / (2.0 * lip * math.sqrt(n) * radius * res_norm)
    else:
        # conditioning unavailable; only a zero-Hessian system can pass
        threshold = 0.0
    gaps_arr = np.array(gaps)
    return DivergenceReport(
        t=np.array(ts, dtype=np.int64),
        gap=gaps_arr,
        update_gap=np.array(update_gaps),
        loss_nonlinear=np.array(loss_nl),
        loss_linearized=np.array(loss_li),
        sup_gap=float(np.max(gaps_arr)) if gaps_arr.size else 0.0,
        hessian_sup=float(h_sup),
        condition_threshold=float(threshold),
        condition_satisfied=bool(h_sup <= threshold),
        epsilon=epsilon,
        mu=float(mu),
        radius=float(radius),
        L_F=float(lip),
    )
