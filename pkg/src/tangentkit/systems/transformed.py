"""Componentwise output transformations of an existing system.

Wrapping a system F with a scalar map phi gives F~(w) = phi(F(w))
applied per output. First and second derivatives compose as

    J~ = diag(phi'(F)) J
    H~_i = phi''(F_i) grad F_i grad F_i^T + phi'(F_i) H_i

and the tangent kernel is the two-sided diagonal scaling D K D with
D = diag(phi'(F)).
"""

from __future__ import annotations

import numpy as np

from ..activations import Activation, get_activation
from ..errors import ContractError, UnsupportedOperationError
from .base import SmoothSystem

__all__ = ["TransformedSystem"]


class TransformedSystem(SmoothSystem):
    """phi applied componentwise to the outputs of a base system."""

    def __init__(self, base: SmoothSystem, output_map: str | Activation):
        if not isinstance(base, SmoothSystem):
            raise ContractError(f"base must be a SmoothSystem, got {type(base).__name__}")
        phi = get_activation(output_map) if isinstance(output_map, str) else output_map
        self.base = base
        self.output_map = phi
        self.n_outputs = base.n_outputs
        self.n_params = base.n_params
        self.activation = base.activation

    def require_smooth(self) -> None:
        self.base.require_smooth()
        if not self.output_map.smooth:
            raise UnsupportedOperationError(
                f"output map {self.output_map.kind!r} is not twice differentiable; "
                "second-order operations are undefined"
            )

    def init_params(self, seed: int) -> np.ndarray:
        return self.base.init_params(seed)

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        return self.output_map.fn(self.base.evaluate(w))

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        d1 = self.output_map.deriv(self.base.evaluate(w))
        return d1[:, None] * self.base.jacobian(w)

    def jvp(self, w: np.ndarray, u: np.ndarray) -> np.ndarray:
        d1 = self.output_map.deriv(self.base.evaluate(w))
        return d1 * self.base.jvp(w, u)

    def vjp(self, w: np.ndarray, r: np.ndarray) -> np.ndarray:
        d1 = self.output_map.deriv(self.base.evaluate(w))
        return self.base.vjp(w, d1 * np.asarray(r, dtype=np.float64))

    def hvp_per_output(self, w: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        self.require_smooth()
        u = np.asarray(u, dtype=np.float64)
        f = self.base.evaluate(w)
        grad = self.base.jacobian(w)[index]
        rank_one = self.output_map.second_deriv(f[index]) * (grad @ u) * grad
        return rank_one + self.output_map.deriv(f[index]) * self.base.hvp_per_output(
            w, index, u
        )

    def hvp_all_outputs(self, w: np.ndarray, U: np.ndarray) -> np.ndarray:
        self.require_smooth()
        U = np.asarray(U, dtype=np.float64)
        f = self.base.evaluate(w)
        J = self.base.jacobian(w)
        d2 = self.output_map.second_deriv(f)
        rank_one = (d2 * np.einsum("ij,ij->i", J, U))[:, None] * J
        return rank_one + self.output_map.deriv(f)[:, None] * self.base.hvp_all_outputs(
            w, U
        )

    def tangent_gram(self, w: np.ndarray) -> np.ndarray:
        d1 = self.output_map.deriv(self.base.evaluate(w))
        return d1[:, None] * self.base.tangent_gram(w) * d1[None, :]
