"""Pure quadratic systems F_i(w) = (1/2) w^T B_i w.

The Jacobian rows (B_i w) and the constant per-output Hessians B_i are in
closed form, which makes this family the exact-constants benchmark for
kernel-change bound checks: no sampled estimate is needed anywhere.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .base import SmoothSystem

__all__ = ["QuadraticSystem"]


class QuadraticSystem(SmoothSystem):
    """F_i(w) = 0.5 * w^T B_i w for fixed symmetric matrices B_i."""

    def __init__(self, matrices: np.ndarray):
        B = np.array(matrices, dtype=np.float64)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise ContractError(
                f"matrices must have shape (n, m, m), got {B.shape}"
            )
        # The quadratic form only sees the symmetric part.
        B = 0.5 * (B + np.transpose(B, (0, 2, 1)))
        B.setflags(write=False)
        self._B = B
        self.n_outputs, self.n_params = B.shape[0], B.shape[1]
        self.activation = None

    @classmethod
    def random(cls, n: int, m: int, seed: int, scale: float = 0.1) -> "QuadraticSystem":
        """n independent symmetric matrices with N(0, scale^2) entries."""
        rng = np.random.default_rng(seed)
        return cls(scale * rng.standard_normal((n, m, m)))

    @property
    def matrices(self) -> np.ndarray:
        return self._B

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        w = self.check_params(w)
        return 0.5 * np.einsum("ijk,j,k->i", self._B, w, w)

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        w = self.check_params(w)
        return np.einsum("ijk,k->ij", self._B, w)

    def hvp_per_output(self, w: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        self.check_params(w)
        if not 0 <= index < self.n_outputs:
            raise ContractError(f"output index {index} out of range [0, {self.n_outputs})")
        return self._B[index] @ np.asarray(u, dtype=np.float64)

    def hvp_all_outputs(self, w: np.ndarray, U: np.ndarray) -> np.ndarray:
        self.check_params(w)
        return np.einsum("ijk,ik->ij", self._B, np.asarray(U, dtype=np.float64))

    def exact_hessian_tensor_norm(self) -> float:
        norms = [np.linalg.norm(Bi, 2) for Bi in self._B]
        return float(max(norms))

    def exact_ball_lipschitz(self, w0: np.ndarray, radius: float) -> float:
        """Certified sup of ||J(w)||_2 over B(w0, radius).

        J(w) is linear in w, so ||J(w0 + delta)||_2 <= ||J(w0)||_2 +
        ||J(delta)||_2 and sup over ||delta|| <= R of ||J(delta)||_2 equals
        R times the spectral norm of the stacked operator u -> (B_i u)_i.
        """
        w0 = self.check_params(w0)
        base = float(np.linalg.norm(self.jacobian(w0), 2))
        stacked = self._B.reshape(self.n_outputs * self.n_params, self.n_params)
        return base + float(radius) * float(np.linalg.norm(stacked, 2))
