"""Base class for differentiable systems F: R^m -> R^n.

A system binds a model family to a fixed set of inputs, so each output
coordinate F_i(w) is the model evaluated on data point i. All derivative
rules are hand-derived per family; every system must agree with the
finite-difference oracle in systems.oracles.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..activations import Activation
from ..errors import ContractError, UnsupportedOperationError

__all__ = ["SmoothSystem"]


class SmoothSystem(ABC):
    """An evaluable map F: R^m -> R^n with exact derivative actions.

    Subclasses set ``n_outputs`` and ``n_params`` in their constructor and
    implement ``evaluate``, ``jacobian`` and (when second derivatives
    exist) ``hvp_per_output``. The remaining operations have generic
    implementations that subclasses may override with faster routes.
    """

    n_outputs: int
    n_params: int
    #: activation whose smoothness gates second-order operations; None for
    #: families with no activation (linear, quadratic) which are smooth.
    activation: Activation | None = None

    # ------------------------------------------------------------------
    # validation helpers
    # ------------------------------------------------------------------
    def check_params(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n_params,):
            raise ContractError(
                f"parameter vector has shape {w.shape}, expected ({self.n_params},)"
            )
        if not np.all(np.isfinite(w)):
            raise ContractError("parameter vector contains non-finite entries")
        return w

    def require_smooth(self) -> None:
        """Raise unless second derivatives exist for this system."""
        act = self.activation
        if act is not None and not act.smooth:
            raise UnsupportedOperationError(
                f"second-order operations need a smooth activation with a "
                f"finite smoothness constant; {act.kind!r} has none"
            )

    # ------------------------------------------------------------------
    # required derivative rules
    # ------------------------------------------------------------------
    @abstractmethod
    def evaluate(self, w: np.ndarray) -> np.ndarray:
        """F(w), shape (n_outputs,)."""

    @abstractmethod
    def jacobian(self, w: np.ndarray) -> np.ndarray:
        """dF/dw, shape (n_outputs, n_params); row i is grad F_i(w)."""

    def hvp_per_output(self, w: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        """H_i(w) u for output ``index``, shape (n_params,). Exact."""
        raise NotImplementedError

    # ------------------------------------------------------------------
    # generic derived operations (override for speed)
    # ------------------------------------------------------------------
    def jvp(self, w: np.ndarray, u: np.ndarray) -> np.ndarray:
        """J(w) u, shape (n_outputs,)."""
        return self.jacobian(w) @ np.asarray(u, dtype=np.float64)

    def vjp(self, w: np.ndarray, r: np.ndarray) -> np.ndarray:
        """J(w)^T r, shape (n_params,)."""
        return self.jacobian(w).T @ np.asarray(r, dtype=np.float64)

    def hvp_all_outputs(self, w: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Stacked H_i(w) U[i] for per-output directions U, shape (n, m).

        U has one direction per output (row i drives output i). The
        generic route loops; families with unit-local structure override
        this with a vectorized version.
        """
        U = np.asarray(U, dtype=np.float64)
        out = np.empty_like(U)
        for i in range(self.n_outputs):
            out[i] = self.hvp_per_output(w, i, U[i])
        return out

    def hessian_weighted_sum_vp(
        self, w: np.ndarray, weights: np.ndarray, u: np.ndarray
    ) -> np.ndarray:
        """(sum_i weights_i H_i(w)) u, shape (m,)."""
        weights = np.asarray(weights, dtype=np.float64)
        U = np.broadcast_to(np.asarray(u, dtype=np.float64), (self.n_outputs, self.n_params))
        return weights @ self.hvp_all_outputs(w, np.ascontiguousarray(U))

    def weighted_loss_hvp(self, w: np.ndarray, r: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Action of the square-loss Hessian at residual r.

        H_L u = J^T J u + sum_i r_i H_i u: the Gauss-Newton term plus the
        residual-weighted curvature term (zero at interpolation).
        """
        self.require_smooth()
        u = np.asarray(u, dtype=np.float64)
        gauss_newton = self.vjp(w, self.jvp(w, u))
        return gauss_newton + self.hessian_weighted_sum_vp(w, r, u)

    def tangent_gram(self, w: np.ndarray) -> np.ndarray:
        """K(w) = J(w) J(w)^T, shape (n, n). Override to avoid forming J."""
        J = self.jacobian(w)
        return J @ J.T

    # ------------------------------------------------------------------
    # optional exact constants (closed-form families override)
    # ------------------------------------------------------------------
    def exact_hessian_tensor_norm(self) -> float | None:
        """max_i ||H_i||_2 when constant in w and known exactly, else None."""
        return None

    def exact_ball_lipschitz(self, w0: np.ndarray, radius: float) -> float | None:
        """A certified upper bound on sup ||J(w)||_2 over B(w0, radius),
        when available in closed form, else None."""
        return None

    # ------------------------------------------------------------------
    # initialization
    # ------------------------------------------------------------------
    def init_params(self, seed: int) -> np.ndarray:
        """Seeded standard-normal parameters (families override to honor
        their own conventions, e.g. sign vectors)."""
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.n_params)
