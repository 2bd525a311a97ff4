"""Hessian-tensor norms, kernel-change checks, and curvature probes.

The Hessian tensor of F stacks the per-output second-derivative matrices
H_i; its norm is max_i ||H_i||_2. Everything here needs only
Hessian-vector products, so no m x m matrix is formed unless m is small
enough for the dense cross-check path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PreconditionError
from .numerics import (
    lambda_min_shifted,
    power_iteration,
    sample_in_ball,
    sample_unit_directions,
    spectral_norm_squared_action,
)
from .systems import SmoothSystem

__all__ = [
    "HessianNormEstimate",
    "CurvatureProbeResult",
    "KernelChangeReport",
    "DeepBounds",
    "hessian_tensor_norm",
    "kernel_change_bound_check",
    "nonconvexity_probe",
    "sparse_hessian_bound",
    "deep_bounds",
    "width_requirement",
    "DENSE_HESSIAN_LIMIT",
]

DENSE_HESSIAN_LIMIT = 256


@dataclass(frozen=True)
class HessianNormEstimate:
    """Per-output spectral norms ||H_i||_2 and their maximum."""

    per_output_norms: np.ndarray
    tensor_norm: float
    method: str
    iterations_used: np.ndarray
    residuals: np.ndarray
    converged: bool


@dataclass(frozen=True)
class CurvatureProbeResult:
    """Outcome of the two-sided negative-curvature search near a minimizer."""

    found_negative: bool
    witness_delta: np.ndarray | None
    witness_direction: np.ndarray | None
    curvature: float | None
    probe_radii: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class KernelChangeReport:
    """Measured ||K(w) - K(w0)||_2 at ball points against the derived cap.

    epsilon = 2 * L_F * sqrt(n) * R * hessian_sup. A failed point is
    reported, not raised: it means the constants were underestimated.
    """

    epsilon: float
    L_F: float
    hessian_sup: float
    radius: float
    measured: np.ndarray
    passed: np.ndarray
    seed: int

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))


def _dense_output_hessian(system: SmoothSystem, w: np.ndarray, i: int) -> np.ndarray:
    m = system.n_params
    H = np.empty((m, m))
    eye = np.eye(m)
    for j in range(m):
        H[:, j] = system.hvp_per_output(w, i, eye[j])
    return H


def hessian_tensor_norm(
    system: SmoothSystem, w: np.ndarray, method: str = "auto", seed: int = 0
) -> HessianNormEstimate:
    """||H|| = max_i ||H_i||_2 at w.

    method: "dense" builds each m x m block and takes the extreme
    eigenvalue magnitude (m <= 256 enforced); "power" runs squared-action
    power iteration (two HVPs per step) per output; "auto" picks dense
    when it fits.
    """
    if method not in ("auto", "dense", "power"):
        raise ContractError(f"method must be auto|dense|power, got {method!r}")
    system.require_smooth()
    w = np.asarray(w, dtype=np.float64)
    if method == "auto":
        method = "dense" if system.n_params <= DENSE_HESSIAN_LIMIT else "power"
    if method == "dense" and system.n_params > DENSE_HESSIAN_LIMIT:
        raise ContractError(
            f"dense path needs n_params <= {DENSE_HESSIAN_LIMIT}, got {system.n_params}"
        )

    n = system.n_outputs
    norms = np.empty(n)
    iters = np.zeros(n, dtype=np.int64)
    residuals = np.zeros(n)
    converged = True
    for i in range(n):
        if method == "dense":
            H = _dense_output_hessian(system, w, i)
            norms[i] = float(np.max(np.abs(np.linalg.eigvalsh(H)))) if system.n_params else 0.0
        else:
            res = spectral_norm_squared_action(
                lambda u: system.hvp_per_output(w, i, u),
                system.n_params,
                seed=seed + i,
            )
            norms[i] = res.value
            iters[i] = res.iterations
            residuals[i] = res.residual
            converged = converged and res.converged
    return HessianNormEstimate(
        per_output_norms=norms,
        tensor_norm=float(np.max(norms)) if n else 0.0,
        method="dense" if method == "dense" else "power-iteration",
        iterations_used=iters,
        residuals=residuals,
        converged=converged,
    )


def _ball_hessian_sup(
    system: SmoothSystem, w0: np.ndarray, radius: float, samples: int, seed: int
) -> float:
    """sup ||H|| over B(w0, radius): exact hook when the family has one,
    otherwise the sampled maximum (center plus `samples` ball points)."""
    exact = system.exact_hessian_tensor_norm()
    if exact is not None:
        return exact
    rng = np.random.default_rng(seed)
    points = [w0] + list(sample_in_ball(w0, radius, samples, rng))
    sup = 0.0
    for k, w in enumerate(points):
        est = hessian_tensor_norm(system, w, method="power", seed=seed + 31 * k)
        sup = max(sup, est.tensor_norm)
    return sup


def kernel_change_bound_check(
    system: SmoothSystem,
    w0: np.ndarray,
    radius: float,
    probe_points: int = 50,
    seed: int = 0,
    sup_samples: int = 64,
) -> KernelChangeReport:
    """Check ||K(w) - K(w0)||_2 <= 2 L_F sqrt(n) R sup||H|| on ball samples.

    L_F and sup||H|| come from exact per-family hooks when available and
    from sampled suprema otherwise; with exact constants the inequality
    is a theorem and must pass at every point.
    """
    if radius <= 0:
        raise ContractError(f"radius must be positive, got {radius}")
    w0 = np.asarray(w0, dtype=np.float64)
    n = system.n_outputs

    lip = system.exact_ball_lipschitz(w0, radius)
    if lip is None:
        rng = np.random.default_rng(seed + 1)
        lip = 0.0
        for w in [w0] + list(sample_in_ball(w0, radius, sup_samples, rng)):
            lip = max(lip, float(np.linalg.svd(system.jacobian(w), compute_uv=False)[0]))
    h_sup = _ball_hessian_sup(system, w0, radius, sup_samples, seed + 2)
    epsilon = 2.0 * lip * math.sqrt(n) * radius * h_sup

    K0 = system.tangent_gram(w0)
    rng = np.random.default_rng(seed)
    points = sample_in_ball(w0, radius, probe_points, rng)
    measured = np.empty(probe_points)
    for k, w in enumerate(points):
        diff = system.tangent_gram(w) - K0
        measured[k] = float(np.max(np.abs(np.linalg.eigvalsh(diff))))
    return KernelChangeReport(
        epsilon=epsilon,
        L_F=float(lip),
        hessian_sup=float(h_sup),
        radius=float(radius),
        measured=measured,
        passed=measured <= epsilon,
        seed=seed,
    )


def nonconvexity_probe(
    system: SmoothSystem,
    w_star: np.ndarray,
    targets: np.ndarray,
    radii: list[float],
    directions_per_radius: int = 32,
    seed: int = 0,
) -> CurvatureProbeResult:
    """Search for negative loss curvature in shrinking shells around w_star.

    Requires w_star to interpolate (L <= 1e-8). For each radius, probes
    random unit directions two-sidedly (both w* + delta and w* - delta)
    plus the previous radius's eigenvector, estimating lambda_min of the
    loss Hessian by shifted power iteration. Stops at the first witness.
    """
    w_star = np.asarray(w_star, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    r0 = system.evaluate(w_star) - targets
    loss0 = 0.5 * float(r0 @ r0)
    if loss0 > 1e-8:
        raise PreconditionError(
            f"probe requires an interpolating point: L(w*) = {loss0:.3e} > 1e-08"
        )
    system.require_smooth()

    rng = np.random.default_rng(seed)
    tried: list[float] = []
    warm: np.ndarray | None = None
    for radius in radii:
        tried.append(float(radius))
        dirs = list(sample_unit_directions(directions_per_radius, system.n_params, rng))
        if warm is not None:
            dirs.insert(0, warm)
        for u in dirs:
            for sign in (1.0, -1.0):
                delta = sign * radius * u
                w = w_star + delta
                r = system.evaluate(w) - targets

                def hvp(vec, w=w, r=r):
                    return system.weighted_loss_hvp(w, r, vec)

                top = power_iteration(hvp, system.n_params, seed=seed, start=warm)
                low = lambda_min_shifted(
                    hvp, system.n_params, top.value, seed=seed, start=warm
                )
                warm = low.vector
                # guard against calling a rounding artifact a witness
                if low.value < -1e-10 * (1.0 + abs(top.value)):
                    v = low.vector / np.linalg.norm(low.vector)
                    curvature = float(v @ hvp(v))
                    if curvature < 0.0:
                        return CurvatureProbeResult(
                            found_negative=True,
                            witness_delta=delta,
                            witness_direction=v,
                            curvature=curvature,
                            probe_radii=tried,
                        )
    return CurvatureProbeResult(
        found_negative=False,
        witness_delta=None,
        witness_direction=None,
        curvature=None,
        probe_radii=tried,
    )


def sparse_hessian_bound(C_s: float, beta_alpha: float, s_P: float) -> float:
    """C_s^3 * beta_alpha / s(P), the sparse-model Hessian-norm cap."""
    if C_s <= 0 or beta_alpha <= 0 or s_P <= 0:
        raise ContractError(
            f"all arguments must be positive, got C_s={C_s}, "
            f"beta_alpha={beta_alpha}, s_P={s_P}"
        )
    return C_s**3 * beta_alpha / s_P


@dataclass(frozen=True)
class DeepBounds:
    """Closed-form width-dependent bounds for a depth-L network.

    hessian_scale caps ||H||_2 over B(W0, R); lipschitz caps the gradient
    tuple norm there (valid for m > R^2); init_output_bound(delta) caps
    |f(W0)| with probability at least 1 - delta over the Gaussian init.
    """

    hessian_scale: float
    lipschitz: float
    output_bound_prefactor: float

    def init_output_bound(self, delta: float) -> float:
        if not 0.0 < delta <= 1.0:
            raise ContractError(f"delta must be in (0, 1], got {delta}")
        return self.output_bound_prefactor / math.sqrt(delta)


def deep_bounds(
    L: int,
    m: int,
    R: float,
    L_sigma: float,
    beta_sigma: float,
    c0: float,
    C_x: float,
    s0: float,
) -> DeepBounds:
    """Evaluate the depth-L bound constants from their exact recursion.

    The per-layer sensitivity caps C_b are built from the recursive
    C_b' sequence (base case C_b'[L-1] = R), then combined into the
    ball-wide Hessian cap L^2 C'(R)/sqrt(m), the Lipschitz constant
    L L_sigma^(L-1) (c0+1)^(L-1) C_x, and the initialization output cap
    prefactor L_sigma^(L-1) c0^(L-1) C_x.
    """
    if L < 2:
        raise ContractError(f"depth L must be >= 2, got {L}")
    if m <= R * R:
        raise PreconditionError(
            f"width hypothesis m > R^2 violated: m={m}, R^2={R * R}"
        )

    cb_prime = {L - 1: R}
    for l in range(L - 2, 0, -1):
        cb_prime[l] = (
            L_sigma ** (L - l - 1) * c0 ** (L - l - 1) * R
            + s0 * beta_sigma * L_sigma ** (L - 2) * (c0 + R) ** L * C_x
            + c0 * L_sigma * cb_prime[l + 1]
        )
    cb = {
        l: s0 * L_sigma ** (L - l - 1) * c0 ** (L - l) + cb_prime[l]
        for l in range(1, L)
    }
    c_prime = beta_sigma * C_x**2 * sum(
        L_sigma ** (2 * l - 1) * (c0 + R) ** (2 * l - 2) * cb[l] for l in range(1, L)
    ) + L_sigma ** (L - 1) * (c0 + R) ** (L - 2) * C_x

    return DeepBounds(
        hessian_scale=L**2 * c_prime / math.sqrt(m),
        lipschitz=L * L_sigma ** (L - 1) * (c0 + 1) ** (L - 1) * C_x,
        output_bound_prefactor=L_sigma ** (L - 1) * c0 ** (L - 1) * C_x,
    )


def width_requirement(n: float, mu: float, lambda_min_K0: float, L: int) -> float:
    """n / (mu^(6L+2) (lambda_min - mu)^2), an order-of-magnitude scale
    only: the hidden constant is not specified."""
    if not 0 < mu < lambda_min_K0:
        raise ContractError(
            f"mu must lie in (0, lambda_min_K0), got mu={mu}, "
            f"lambda_min_K0={lambda_min_K0}"
        )
    return n / (mu ** (6 * L + 2) * (lambda_min_K0 - mu) ** 2)
