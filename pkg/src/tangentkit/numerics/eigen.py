"""Symmetric eigenvalue machinery.

Dense solves are used up to DENSE_EIGEN_LIMIT; beyond that, extreme
eigenvalues come from a hand-rolled Lanczos iteration with full
reorthogonalization. Non-convergence is always reported, never silently
truncated. Matrix-free estimates (power iteration variants) operate on a
caller-supplied action ``matvec: (dim,) -> (dim,)`` so they work with
Hessian-vector products that are never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ContractError

__all__ = [
    "DENSE_EIGEN_LIMIT",
    "PowerIterationResult",
    "LanczosResult",
    "dense_extremes",
    "lanczos_extremes",
    "symmetric_extremes",
    "power_iteration",
    "spectral_norm_squared_action",
    "lambda_min_shifted",
]

DENSE_EIGEN_LIMIT = 512


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool
    residual: float  # last relative Rayleigh-quotient change


@dataclass(frozen=True)
class LanczosResult:
    lambda_min: float
    lambda_max: float
    iterations: int
    converged: bool
    residual: float


def dense_extremes(matrix: np.ndarray) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a dense symmetric matrix."""
    vals = np.linalg.eigvalsh(matrix)
    return float(vals[0]), float(vals[-1])


def lanczos_extremes(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_iters: int | None = None,
) -> LanczosResult:
    """Extreme eigenvalues of a symmetric operator by Lanczos iteration.

    Full reorthogonalization against all previous Lanczos vectors keeps the
    basis orthonormal at the cost of O(k * dim) per step. Convergence is
    declared when the residual bounds |beta_k * s_last| of both the smallest
    and largest Ritz pairs fall below tol * max(1, |theta|). The iteration
    cap defaults to 10 * dim; hitting it returns converged=False.
    """
    if dim < 1:
        raise ContractError(f"operator dimension must be >= 1, got {dim}")
    if max_iters is None:
        max_iters = 10 * dim
    max_iters = min(max_iters, 10 * dim)
    rng = np.random.default_rng(seed)

    basis = np.zeros((max_iters + 1, dim))
    alphas: list[float] = []
    betas: list[float] = []

    q = rng.standard_normal(dim)
    q /= np.linalg.norm(q)
    basis[0] = q
    residual = np.inf

    for k in range(max_iters):
        u = matvec(basis[k])
        alpha = float(basis[k] @ u)
        alphas.append(alpha)
        u = u - alpha * basis[k]
        if k > 0:
            u = u - betas[-1] * basis[k - 1]
        # Full reorthogonalization, applied twice for numerical safety.
        active = basis[: k + 1]
        u -= active.T @ (active @ u)
        u -= active.T @ (active @ u)
        beta = float(np.linalg.norm(u))

        if k >= 1 or beta <= tol:
            T = _tridiagonal(alphas, betas)
            theta, S = np.linalg.eigh(T)
            res_lo = abs(beta * S[-1, 0]) / max(1.0, abs(theta[0]))
            res_hi = abs(beta * S[-1, -1]) / max(1.0, abs(theta[-1]))
            residual = max(res_lo, res_hi)
            if residual <= tol or k + 1 >= dim:
                return LanczosResult(
                    float(theta[0]), float(theta[-1]), k + 1, True, residual
                )
        if beta <= 1e-300:
            # Invariant subspace found; extremes of T are exact.
            T = _tridiagonal(alphas, betas)
            theta = np.linalg.eigvalsh(T)
            return LanczosResult(float(theta[0]), float(theta[-1]), k + 1, True, 0.0)
        betas.append(beta)
        basis[k + 1] = u / beta

    T = _tridiagonal(alphas, betas[: len(alphas) - 1])
    theta = np.linalg.eigvalsh(T)
    return LanczosResult(float(theta[0]), float(theta[-1]), max_iters, False, residual)


def _tridiagonal(alphas: list[float], betas: list[float]) -> np.ndarray:
    k = len(alphas)
    T = np.diag(np.asarray(alphas))
    if k > 1:
        off = np.asarray(betas[: k - 1])
        T += np.diag(off, 1) + np.diag(off, -1)
    return T


def symmetric_extremes(matrix: np.ndarray, seed: int = 0) -> tuple[float, float]:
    """(lambda_min, lambda_max), dense under the size limit, Lanczos above.

    Raises RuntimeError if Lanczos fails to converge within its cap.
    """
    n = matrix.shape[0]
    if n <= DENSE_EIGEN_LIMIT:
        return dense_extremes(matrix)
    result = lanczos_extremes(lambda v: matrix @ v, n, seed=seed)
    if not result.converged:
        raise RuntimeError(
            f"Lanczos did not converge within {result.iterations} iterations "
            f"(residual {result.residual:.3e})"
        )
    return result.lambda_min, result.lambda_max


def power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_iters: int = 1000,
    start: np.ndarray | None = None,
) -> PowerIterationResult:
    """Dominant eigenpair of a symmetric PSD-dominant operator.

    Stops when successive Rayleigh quotients agree to relative tol. For an
    operator whose dominant eigenvalue is positive (e.g. a PSD matrix or a
    shifted one), the Rayleigh quotient converges to lambda_max.
    """
    if dim < 1:
        raise ContractError(f"operator dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) if start is None else np.array(start, dtype=np.float64)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        v = rng.standard_normal(dim)
        nrm = np.linalg.norm(v)
    v /= nrm

    rayleigh_old = np.inf
    rayleigh = 0.0
    residual = np.inf
    for k in range(1, max_iters + 1):
        Av = matvec(v)
        rayleigh = float(v @ Av)
        residual = abs(rayleigh - rayleigh_old) / max(1e-300, abs(rayleigh))
        if residual <= tol:
            return PowerIterationResult(rayleigh, v, k, True, residual)
        nrm = float(np.linalg.norm(Av))
        if nrm <= 1e-300:
            # Operator annihilates the iterate: dominant eigenvalue is 0
            # on this invariant subspace.
            return PowerIterationResult(0.0, v, k, True, 0.0)
        v = Av / nrm
        rayleigh_old = rayleigh
    return PowerIterationResult(rayleigh, v, max_iters, False, residual)


def spectral_norm_squared_action(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_iters: int = 2000,
    start: np.ndarray | None = None,
) -> PowerIterationResult:
    """Spectral norm of a symmetric (possibly indefinite) operator.

    Runs power iteration on the squared action v -> A(A v), which is PSD
    with top eigenvalue ||A||_2^2, at two matvecs per step. The returned
    value is already the square root.
    """
    result = power_iteration(
        lambda v: matvec(matvec(v)),
        dim,
        seed=seed,
        tol=tol,
        max_iters=max_iters,
        start=start,
    )
    value = float(np.sqrt(max(result.value, 0.0)))
    return PowerIterationResult(
        value, result.vector, result.iterations, result.converged, result.residual
    )


def lambda_min_shifted(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    lambda_max_estimate: float,
    seed: int = 0,
    tol: float = 1e-8,
    max_iters: int = 2000,
    margin: float = 1e-3,
    start: np.ndarray | None = None,
) -> PowerIterationResult:
    """Smallest eigenvalue of a symmetric operator via a spectral shift.

    Power-iterates c*I - A with c = lambda_max_estimate + margin, whose
    dominant eigenvalue is c - lambda_min(A); no linear solves needed.
    The returned vector approximates the eigenvector of lambda_min(A).
    """
    c = lambda_max_estimate + margin
    result = power_iteration(
        lambda v: c * v - matvec(v),
        dim,
        seed=seed,
        tol=tol,
        max_iters=max_iters,
        start=start,
    )
    return PowerIterationResult(
        c - result.value,
        result.vector,
        result.iterations,
        result.converged,
        result.residual,
    )
