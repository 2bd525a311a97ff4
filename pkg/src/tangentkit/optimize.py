"""Gradient descent and mini-batch SGD with derived step prescriptions.

Step sizes come in two closed forms. The smoothness form needs the
sampled Lipschitz/smoothness constants:

    eta = 1 / (L_F^2 + beta_F ||F(w0) - y||),  R = 2 L_F ||F(w0) - y|| / mu

and is solved by a short fixed-point loop because L_F and beta_F are
ball-dependent while R depends on them back. The kernel form needs the
kernel spectrum at the start point:

    eta = 2 sqrt(n) L_F^2 / (2 sqrt(n) L_F^4 + (lambda_min(K0) - mu) mu)

with the same radius. Square loss throughout: L(w) = 0.5 ||F(w) - y||^2
and the gradient is the sum over equations, not the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditioning import ConstantsEstimate, estimate_constants, tangent_kernel
from .errors import ContractError
from .systems import SmoothSystem

__all__ = [
    "GDPrescription",
    "SGDPrescription",
    "Trajectory",
    "RateReport",
    "prescribe_gd",
    "run_gd",
    "prescribe_sgd",
    "run_sgd",
    "verify_rate",
    "DIVERGENCE_LOSS",
]

DIVERGENCE_LOSS = 1e12

PROVENANCES = ("smoothness", "kernel", "user")


@dataclass(frozen=True)
class GDPrescription:
    """A derived (step, ball radius) pair and the rule that produced it."""

    step_size: float
    radius: float
    mu: float
    provenance: str

    def __post_init__(self):
        if self.step_size <= 0 or self.radius <= 0:
            raise ContractError("prescription requires positive step and radius")
        if self.provenance not in PROVENANCES:
            raise ContractError(f"provenance must be one of {PROVENANCES}")


@dataclass(frozen=True)
class SGDPrescription:
    step: float
    radius: float
    rate_factor: float


@dataclass(frozen=True)
class Trajectory:
    """Per-iteration record of an optimization run.

    lambda_min_K is NaN at iterations where the kernel was not sampled.
    """

    t: np.ndarray
    loss: np.ndarray
    dist_from_init: np.ndarray
    grad_norm: np.ndarray
    lambda_min_K: np.ndarray
    final_w: np.ndarray
    converged: bool
    stop_reason: str

    def __post_init__(self):
        if np.any(self.loss < 0):
            raise ContractError("losses must be nonnegative")
        if np.any(np.diff(self.t) <= 0):
            raise ContractError("iteration indices must be strictly increasing")

    @property
    def final_loss(self) -> float:
        return float(self.loss[-1])

    def min_lambda_min(self) -> float:
        vals = self.lambda_min_K[~np.isnan(self.lambda_min_K)]
        if vals.size == 0:
            raise ContractError("trajectory recorded no kernel eigenvalues")
        return float(np.min(vals))


@dataclass(frozen=True)
class RateReport:
    holds: bool
    first_violation: int | None
    margins: np.ndarray


def prescribe_gd(
    system: SmoothSystem,
    w0: np.ndarray,
    targets: np.ndarray,
    constants: ConstantsEstimate | None,
    mu: float,
    mode: str = "smoothness",
    samples: int = 64,
    seed: int = 0,
    safety_factor: float = 1.1,
) -> GDPrescription:
    """Derive (step, radius) for GD on the square loss.

    With `constants` supplied they are used as-is (the caller vouches
    they were estimated on a ball at least as large as the resulting R).
    Otherwise constants are re-estimated on B(w0, R) by a fixed-point
    loop until R stabilizes within 5% or five rounds.
    """
    if mu <= 0:
        raise ContractError(f"mu must be positive, got {mu}")
    if mode not in ("smoothness", "kernel"):
        raise ContractError(f"mode must be smoothness|kernel, got {mode!r}")
    w0 = np.asarray(w0, dtype=np.float64)
    res_norm = float(np.linalg.norm(system.evaluate(w0) - np.asarray(targets)))

    def derive(c: ConstantsEstimate) -> tuple[float, float]:
        radius = 2.0 * c.L_F_hat * res_norm / mu
        if mode == "smoothness":
            step = 1.0 / (c.L_F_hat**2 + c.beta_F_hat * res_norm)
        else:
            lam_min = tangent_kernel(system, w0).lambda_min
            if mu >= lam_min:
                raise ContractError(
                    f"kernel mode needs mu < lambda_min(K(w0)) = {lam_min:.6g}, "
                    f"got mu = {mu}"
                )
            n = system.n_outputs
            L2 = c.L_F_hat**2
            step = 2.0 * math.sqrt(n) * L2 / (
                2.0 * math.sqrt(n) * L2**2 + (lam_min - mu) * mu
            )
        return step, radius

    if constants is not None:
        step, radius = derive(constants)
    else:
        radius = 1.0
        step = 0.0
        for _ in range(5):
            constants = estimate_constants(
                system, w0, radius, samples=samples, seed=seed,
                safety_factor=safety_factor,
            )
            step, new_radius = derive(constants)
            if abs(new_radius - radius) <= 0.05 * radius:
                radius = new_radius
                break
            radius = new_radius
    return GDPrescription(step_size=step, radius=radius, mu=mu, provenance=mode)


def run_gd(
    system: SmoothSystem,
    w0: np.ndarray,
    targets: np.ndarray,
    step: float,
    max_iters: int,
    loss_tol: float = 0.0,
    kernel_every: int | None = None,
) -> Trajectory:
    """Full-batch gradient descent on the square loss, fully deterministic.

    Records every iteration; lambda_min(K(w_t)) is sampled every
    `kernel_every` iterations (and at the last one) when requested.
    """
    if step <= 0:
        raise ContractError(f"step must be positive, got {step}")
    w = np.array(w0, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)

    ts, losses, dists, gnorms, lams = [], [], [], [], []
    stop_reason = "max_iters"
    converged = False
    t = 0
    while True:
        r = system.evaluate(w) - targets
        loss = 0.5 * float(r @ r)
        grad = system.vjp(w, r)
        finite = math.isfinite(loss) and bool(np.all(np.isfinite(grad)))
        diverged = not finite or loss > DIVERGENCE_LOSS
        converged = finite and loss <= loss_tol
        final = converged or diverged or t >= max_iters

        ts.append(t)
        losses.append(loss if finite else math.inf)
        dists.append(float(np.linalg.norm(w - w0)))
        gnorms.append(float(np.linalg.norm(grad)) if finite else math.inf)
        sample_kernel = kernel_every is not None and (t % kernel_every == 0 or final)
        lams.append(
            tangent_kernel(system, w).lambda_min if sample_kernel and finite else math.nan
        )

        if final:
            if converged:
                stop_reason = "converged"
            elif diverged:
                stop_reason = "diverged"
            break
        w -= step * grad
        t += 1

    return Trajectory(
        t=np.array(ts, dtype=np.int64),
        loss=np.array(losses),
        dist_from_init=np.array(dists),
        grad_norm=np.array(gnorms),
        lambda_min_K=np.array(lams),
        final_w=w,
        converged=converged,
        stop_reason=stop_reason,
    )


def prescribe_sgd(
    n: int, mu: float, gamma: float, batch_size: int, L0: float, delta: float
) -> SGDPrescription:
    """Step, high-probability ball radius, and expected per-step rate factor
    for mini-batch SGD at interpolation."""
    if not 1 <= batch_size <= n:
        raise ContractError(f"batch_size must be within [1, {n}], got {batch_size}")
    if mu <= 0 or gamma <= 0 or delta <= 0:
        raise ContractError("mu, gamma, delta must all be positive")
    s = batch_size
    step = n * mu / (n * gamma * (n**2 * gamma + mu * (s - 1)))
    radius = 2.0 * n * math.sqrt(2.0 * gamma) * math.sqrt(L0) / (mu * delta)
    rate = 1.0 - mu * s * step / n
    return SGDPrescription(step=step, radius=radius, rate_factor=rate)


def run_sgd(
    system: SmoothSystem,
    w0: np.ndarray,
    targets: np.ndarray,
    step: float,
    batch_size: int,
    max_iters: int,
    loss_tol: float = 0.0,
    seed: int = 0,
    loss_every: int = 10,
    replace: bool = True,
) -> Trajectory:
    """Mini-batch SGD with the sum-form update w -= eta * sum_{i in S} grad l_i.

    Batch indices are drawn uniformly with replacement by default (each
    element of S chosen independently); replace=False switches to
    without-replacement draws. The full-batch loss is recorded every
    `loss_every` iterations plus the stopping one.
    """
    if step <= 0:
        raise ContractError(f"step must be positive, got {step}")
    n = system.n_outputs
    if not 1 <= batch_size <= n:
        raise ContractError(f"batch_size must be within [1, {n}], got {batch_size}")
    if loss_every < 1:
        raise ContractError(f"loss_every must be >= 1, got {loss_every}")
    rng = np.random.default_rng(seed)
    w = np.array(w0, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)

    ts, losses, dists, gnorms = [], [], [], []
    stop_reason = "max_iters"
    converged = False
    t = 0
    while True:
        checkpoint = t % loss_every == 0 or t >= max_iters
        r = system.evaluate(w) - targets
        loss = 0.5 * float(r @ r)
        finite = math.isfinite(loss)
        diverged = not finite or loss > DIVERGENCE_LOSS
        converged = finite and loss <= loss_tol
        final = converged or diverged or t >= max_iters

        if checkpoint or final:
            grad = system.vjp(w, r) if finite else np.full_like(w, math.inf)
            ts.append(t)
            losses.append(loss if finite else math.inf)
            dists.append(float(np.linalg.norm(w - w0)))
            gnorms.append(float(np.linalg.norm(grad)) if finite else math.inf)
        if final:
            if converged:
                stop_reason = "converged"
            elif diverged:
                stop_reason = "diverged"
            break

        if replace:
            batch = rng.integers(0, n, size=batch_size)
        else:
            batch = rng.choice(n, size=batch_size, replace=False)
        # sum over the batch of per-equation gradients r_i * grad F_i
        weights = np.zeros(n)
        np.add.at(weights, batch, r[batch])
        w -= step * system.vjp(w, weights)
        t += 1

    return Trajectory(
        t=np.array(ts, dtype=np.int64),
        loss=np.array(losses),
        dist_from_init=np.array(dists),
        grad_norm=np.array(gnorms),
        lambda_min_K=np.full(len(ts), math.nan),
        final_w=w,
        converged=converged,
        stop_reason=stop_reason,
    )


def verify_rate(trajectory: Trajectory, eta: float, mu: float) -> RateReport:
    """Check L(w_t) <= (1 - eta mu)^t L(w_0) (1 + 1e-9) at recorded points."""
    if not 0 < eta * mu < 1:
        raise ContractError(f"need 0 < eta*mu < 1, got eta*mu = {eta * mu}")
    L0 = float(trajectory.loss[0])
    bound = (1.0 - eta * mu) ** trajectory.t.astype(np.float64) * L0 * (1.0 + 1e-9)
    margins = bound - trajectory.loss
    bad = np.flatnonzero(margins < 0)
    return RateReport(
        holds=bad.size == 0,
        first_violation=int(trajectory.t[bad[0]]) if bad.size else None,
        margins=margins,
    )
