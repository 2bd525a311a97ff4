"""Tangent kernels, PL* ratios, and ball conditioning certificates.

The central objects are the n x n tangent kernel K(w) = J(w) J(w)^T and
the square loss L(w) = (1/2)||F(w) - y||^2. Uniform conditioning of K
over a ball is certified by seeded sampling: the true ball infimum is
not computable, so certificates record the sample count and seed and are
reproducible and monotone-improvable instead of exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ContractError, PreconditionError
from .numerics import power_iteration, sample_in_ball, symmetric_extremes
from .systems import SmoothSystem
from .activations import Activation, get_activation

__all__ = [
    "TangentKernel",
    "ConditioningCertificate",
    "ConstantsEstimate",
    "tangent_kernel",
    "pl_star_ratio",
    "certify_ball",
    "estimate_constants",
    "transformed_kernel",
    "KERNEL_SIZE_LIMIT",
]

KERNEL_SIZE_LIMIT = 10_000


@dataclass(frozen=True)
class TangentKernel:
    """K(w) with its eigen-extremes and the point it was computed at."""

    matrix: np.ndarray
    lambda_min: float
    lambda_max: float
    anchor_w: np.ndarray


@dataclass(frozen=True)
class ConditioningCertificate:
    """Sampled conditioning summary of a ball B(w0, R).

    kappa_hat = lambda_max_loss_hat / mu_hat when mu_hat > 0; otherwise
    the ball is flagged not uniformly conditioned and kappa_hat is None.
    """

    ball_center: np.ndarray
    ball_radius: float
    mu_hat: float
    lambda_max_loss_hat: float
    kappa_hat: float | None
    pl_ratio_min: float
    sample_count: int
    seed: int

    @property
    def uniformly_conditioned(self) -> bool:
        return self.mu_hat > 0.0

    def to_record(self) -> dict:
        return {
            "ball_radius": self.ball_radius,
            "mu_hat": self.mu_hat,
            "lambda_max_loss_hat": self.lambda_max_loss_hat,
            "kappa_hat": self.kappa_hat,
            "pl_ratio_min": self.pl_ratio_min,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "uniformly_conditioned": self.uniformly_conditioned,
        }


@dataclass(frozen=True)
class ConstantsEstimate:
    """Sampled Lipschitz/smoothness constants over a ball, with safety factor.

    gamma_hat (sup per-equation loss smoothness) requires targets and is
    None when they were not supplied.
    """

    L_F_hat: float
    beta_F_hat: float
    gamma_hat: float | None
    safety_factor: float


def tangent_kernel(system: SmoothSystem, w: np.ndarray) -> TangentKernel:
    """K(w) = J(w) J(w)^T with dense or Lanczos eigen-extremes."""
    if system.n_outputs > KERNEL_SIZE_LIMIT:
        raise CapacityError(
            f"n={system.n_outputs} exceeds the dense-kernel guard "
            f"({KERNEL_SIZE_LIMIT}); use a sampled kernel trace instead"
        )
    w = np.asarray(w, dtype=np.float64)
    K = system.tangent_gram(w)
    lam_min, lam_max = symmetric_extremes(K)
    return TangentKernel(K, lam_min, lam_max, w.copy())


def pl_star_ratio(system: SmoothSystem, w: np.ndarray, targets: np.ndarray) -> float:
    """(1/2)||grad L(w)||^2 / L(w) for the square loss; inf at interpolation."""
    targets = np.asarray(targets, dtype=np.float64)
    r = system.evaluate(w) - targets
    loss = 0.5 * float(r @ r)
    if loss == 0.0:
        return math.inf
    grad = system.vjp(w, r)
    return 0.5 * float(grad @ grad) / loss


def _loss_hessian_lambda_max(
    system: SmoothSystem, w: np.ndarray, targets: np.ndarray, seed: int
) -> float:
    """lambda_max of grad^2 L(w) by power iteration on weighted_loss_hvp."""
    r = system.evaluate(w) - np.asarray(targets, dtype=np.float64)
    result = power_iteration(
        lambda u: system.weighted_loss_hvp(w, r, u),
        system.n_params,
        seed=seed,
        tol=1e-8,
        max_iters=1000,
    )
    return result.value


def certify_ball(
    system: SmoothSystem,
    w0: np.ndarray,
    radius: float,
    targets: np.ndarray,
    samples: int = 64,
    seed: int = 0,
    extra_points: np.ndarray | None = None,
) -> ConditioningCertificate:
    """Sampled conditioning certificate for B(w0, radius).

    Evaluates lambda_min(K), lambda_max of the loss Hessian, and the PL*
    ratio at the center, at `samples` uniform ball points, and at any
    caller-supplied extra points (e.g. an optimizer trajectory), then
    aggregates the extremes.
    """
    if samples < 1:
        raise ContractError(f"samples must be >= 1, got {samples}")
    if radius <= 0:
        raise ContractError(f"radius must be positive, got {radius}")
    w0 = np.asarray(w0, dtype=np.float64)
    rng = np.random.default_rng(seed)
    points = [w0] + list(sample_in_ball(w0, radius, samples, rng))
    if extra_points is not None:
        points += [np.asarray(p, dtype=np.float64) for p in np.atleast_2d(extra_points)]

    mu_hat = math.inf
    lam_loss = -math.inf
    pl_min = math.inf
    for k, w in enumerate(points):
        kern = tangent_kernel(system, w)
        mu_hat = min(mu_hat, kern.lambda_min)
        lam_loss = max(lam_loss, _loss_hessian_lambda_max(system, w, targets, seed + k))
        pl_min = min(pl_min, pl_star_ratio(system, w, targets))

    kappa = lam_loss / mu_hat if mu_hat > 0 else None
    return ConditioningCertificate(
        ball_center=w0.copy(),
        ball_radius=float(radius),
        mu_hat=float(mu_hat),
        lambda_max_loss_hat=float(lam_loss),
        kappa_hat=kappa,
        pl_ratio_min=float(pl_min),
        sample_count=len(points),
        seed=seed,
    )


def estimate_constants(
    system: SmoothSystem,
    w0: np.ndarray,
    radius: float,
    samples: int = 64,
    seed: int = 0,
    safety_factor: float = 1.1,
    targets: np.ndarray | None = None,
) -> ConstantsEstimate:
    """Sampled L_F, beta_F, and per-equation gamma over B(w0, radius).

    L_F_hat bounds sup ||grad F||_2, beta_F_hat = sqrt(n) * sup ||H||
    (the Hessian-tensor norm controls the Jacobian's Lipschitz constant
    coordinatewise, and sqrt(n) converts to the spectral norm), and
    gamma_hat bounds the largest single-equation loss curvature. Exact
    per-family hooks replace sampling when available.
    """
    if samples < 2:
        raise ContractError(f"samples must be >= 2, got {samples}")
    system.require_smooth()
    w0 = np.asarray(w0, dtype=np.float64)
    rng = np.random.default_rng(seed)
    points = [w0] + list(sample_in_ball(w0, radius, samples, rng))
    n = system.n_outputs

    exact_lip = system.exact_ball_lipschitz(w0, radius)
    if exact_lip is not None:
        lip = exact_lip
    else:
        lip = 0.0
        for w in points:
            J = system.jacobian(w)
            s = np.linalg.svd(J, compute_uv=False)[0]
            lip = max(lip, float(s))

    exact_h = system.exact_hessian_tensor_norm()
    if exact_h is not None:
        h_sup = exact_h
    else:
        h_sup = 0.0
        for k, w in enumerate(points):
            h_sup = max(h_sup, _hessian_norm_at(system, w, seed + 7 * k))

    gamma = None
    if targets is not None:
        targets = np.asarray(targets, dtype=np.float64)
        gamma = 0.0
        for k, w in enumerate(points):
            J = system.jacobian(w)
            r = system.evaluate(w) - targets
            for i in range(n):
                gi = J[i]

                def hvp(u, i=i, gi=gi, ri=r[i], w=w):
                    return (gi @ u) * gi + ri * system.hvp_per_output(w, i, u)

                res = power_iteration(hvp, system.n_params, seed=seed + 13 * k + i)
                gamma = max(gamma, res.value)
        gamma = safety_factor * gamma

    return ConstantsEstimate(
        L_F_hat=safety_factor * lip,
        beta_F_hat=safety_factor * math.sqrt(n) * h_sup,
        gamma_hat=gamma,
        safety_factor=safety_factor,
    )


def _hessian_norm_at(system: SmoothSystem, w: np.ndarray, seed: int) -> float:
    """max_i ||H_i(w)||_2 via squared-action power iteration per output."""
    from .numerics import spectral_norm_squared_action

    worst = 0.0
    for i in range(system.n_outputs):
        res = spectral_norm_squared_action(
            lambda u: system.hvp_per_output(w, i, u),
            system.n_params,
            seed=seed + i,
        )
        worst = max(worst, res.value)
    return worst


def transformed_kernel(
    base_kernel: TangentKernel | np.ndarray,
    f_values: np.ndarray,
    output_map: str | Activation,
) -> tuple[TangentKernel, float]:
    """Kernel of phi composed onto F: K~ = D K D, D = diag(phi'(F)).

    Returns the transformed kernel and rho = min_i |phi'(F_i)|. rho = 0
    means conditioning does not transfer through phi at this point (a
    flag for the caller, not an error).
    """
    phi = get_activation(output_map) if isinstance(output_map, str) else output_map
    K = base_kernel.matrix if isinstance(base_kernel, TangentKernel) else np.asarray(base_kernel)
    anchor = (
        base_kernel.anchor_w
        if isinstance(base_kernel, TangentKernel)
        else np.empty(0)
    )
    f_values = np.asarray(f_values, dtype=np.float64)
    if f_values.shape[0] != K.shape[0]:
        raise PreconditionError(
            f"f_values length {f_values.shape[0]} does not match kernel size {K.shape[0]}"
        )
    d = phi.deriv(f_values)
    K_t = d[:, None] * K * d[None, :]
    lam_min, lam_max = symmetric_extremes(K_t)
    rho = float(np.min(np.abs(d)))
    return TangentKernel(K_t, lam_min, lam_max, anchor), rho
