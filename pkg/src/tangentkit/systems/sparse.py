"""Additive models whose nonlinear units touch few parameters each.

f_j(w) = (1/scale) sum_p v_p sigma(x_j * <g_p, w[S_p]>)

Each unit p owns an index subset S_p with |S_p| <= C_s, and every
parameter index belongs to at most C_s subsets; together these keep each
per-output Hessian row/column at most C_s^2-sparse. Coefficients satisfy
|v_p| <= 1 and gain vectors ||g_p|| <= 1, so the units are beta-smooth
with beta_alpha = beta_sigma * max_j x_j^2.
"""

from __future__ import annotations

import numpy as np

from ..activations import Activation, get_activation
from ..errors import ContractError
from .base import SmoothSystem

__all__ = ["SparseAdditiveModel"]


class SparseAdditiveModel(SmoothSystem):
    """Sparse additive model bound to fixed scalar inputs.

    Parameters
    ----------
    n_params : int
        Ambient parameter-vector length m.
    subsets : list of int arrays
        S_p per unit; validated against sparsity_bound.
    gains : array, shape (P, subset_size) or list of arrays
        g_p per unit, each with norm <= 1.
    coefficients : array, shape (P,)
        v_p per unit, |v_p| <= 1.
    scale : float
        The positive denominator s(P).
    sparsity_bound : int
        C_s.
    activation : str | Activation
        Unit nonlinearity sigma.
    inputs : array, shape (n,)
        Scalar data point per output.
    """

    def __init__(
        self,
        n_params: int,
        subsets: list[np.ndarray],
        gains: list[np.ndarray],
        coefficients: np.ndarray,
        scale: float,
        sparsity_bound: int,
        activation: str | Activation,
        inputs: np.ndarray,
    ):
        if scale <= 0:
            raise ContractError(f"scale must be positive, got {scale}")
        if sparsity_bound < 1:
            raise ContractError(f"sparsity_bound must be >= 1, got {sparsity_bound}")
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 1:
            raise ContractError(f"inputs must be 1-D scalars, got shape {x.shape}")
        coefficients = np.asarray(coefficients, dtype=np.float64)
        if len(subsets) != len(gains) or len(subsets) != coefficients.shape[0]:
            raise ContractError("subsets, gains, and coefficients must have equal length")
        if np.any(np.abs(coefficients) > 1.0 + 1e-12):
            raise ContractError("unit coefficients must satisfy |v_p| <= 1")

        usage = np.zeros(n_params, dtype=np.int64)
        cleaned_subsets, cleaned_gains = [], []
        for p, (idx, g) in enumerate(zip(subsets, gains)):
            idx = np.asarray(idx, dtype=np.int64)
            g = np.asarray(g, dtype=np.float64)
            if idx.ndim != 1 or g.shape != idx.shape:
                raise ContractError(f"unit {p}: subset and gain shapes disagree")
            if idx.shape[0] > sparsity_bound:
                raise ContractError(
                    f"unit {p}: subset size {idx.shape[0]} exceeds C_s={sparsity_bound}"
                )
            if np.unique(idx).shape[0] != idx.shape[0]:
                raise ContractError(f"unit {p}: subset indices must be distinct")
            if np.any(idx < 0) or np.any(idx >= n_params):
                raise ContractError(f"unit {p}: subset index out of range [0, {n_params})")
            if np.linalg.norm(g) > 1.0 + 1e-12:
                raise ContractError(f"unit {p}: gain norm exceeds 1")
            np.add.at(usage, idx, 1)
            cleaned_subsets.append(idx)
            cleaned_gains.append(g)
        if np.any(usage > sparsity_bound):
            worst = int(np.argmax(usage))
            raise ContractError(
                f"parameter {worst} appears in {usage[worst]} subsets, "
                f"more than C_s={sparsity_bound}"
            )

        act = get_activation(activation) if isinstance(activation, str) else activation
        self.n_params = n_params
        self.n_outputs = x.shape[0]
        self.activation = act
        self.subsets = cleaned_subsets
        self.gains = cleaned_gains
        self.coefficients = coefficients
        self.scale = float(scale)
        self.sparsity_bound = sparsity_bound
        self.x = x

    @classmethod
    def random(
        cls,
        n_params: int,
        n_units: int,
        sparsity_bound: int,
        activation: str | Activation,
        inputs: np.ndarray,
        seed: int,
        scale: float | None = None,
    ) -> "SparseAdditiveModel":
        """Random instance: unit-norm gains, +/-1 coefficients, subsets drawn
        uniformly among indices still below the usage cap (so feasibility
        requires n_units * C_s comfortably below n_params * C_s)."""
        rng = np.random.default_rng(seed)
        usage = np.zeros(n_params, dtype=np.int64)
        subsets, gains = [], []
        for _ in range(n_units):
            eligible = np.flatnonzero(usage < sparsity_bound)
            if eligible.shape[0] < sparsity_bound:
                raise ContractError(
                    "not enough index capacity left; lower n_units or raise n_params"
                )
            idx = rng.choice(eligible, size=sparsity_bound, replace=False)
            usage[idx] += 1
            g = rng.standard_normal(sparsity_bound)
            subsets.append(np.sort(idx))
            gains.append(g / np.linalg.norm(g))
        coefficients = rng.choice(np.array([-1.0, 1.0]), size=n_units)
        return cls(
            n_params,
            subsets,
            gains,
            coefficients,
            np.sqrt(n_units) if scale is None else scale,
            sparsity_bound,
            activation,
            inputs,
        )

    def unit_smoothness_bound(self) -> float:
        """Certified beta_alpha: each unit w -> sigma(x <g, w[S]>) has Hessian
        norm at most beta_sigma * x^2 * ||g||^2 <= beta_sigma * max_j x_j^2."""
        self.require_smooth()
        gain_sq = max(float(g @ g) for g in self.gains) if self.gains else 0.0
        return self.activation.smoothness_constant * float(np.max(self.x**2)) * gain_sq

    # ------------------------------------------------------------------
    def _unit_values(self, w: np.ndarray) -> np.ndarray:
        """u_p = <g_p, w[S_p]> for every unit, shape (P,)."""
        return np.array([g @ w[idx] for idx, g in zip(self.subsets, self.gains)])

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        w = self.check_params(w)
        z = np.outer(self.x, self._unit_values(w))
        return self.activation.fn(z) @ self.coefficients / self.scale

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        w = self.check_params(w)
        z = np.outer(self.x, self._unit_values(w))
        d1 = self.activation.deriv(z)
        J = np.zeros((self.n_outputs, self.n_params))
        for p, (idx, g) in enumerate(zip(self.subsets, self.gains)):
            J[:, idx] += (self.coefficients[p] * self.x * d1[:, p])[:, None] * g[None, :]
        return J / self.scale

    def hvp_per_output(self, w: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        if not 0 <= index < self.n_outputs:
            raise ContractError(f"output index {index} out of range [0, {self.n_outputs})")
        self.require_smooth()
        w = self.check_params(w)
        u = np.asarray(u, dtype=np.float64)
        xi = self.x[index]
        z = xi * self._unit_values(w)
        d2 = self.activation.second_deriv(z)
        out = np.zeros(self.n_params)
        for p, (idx, g) in enumerate(zip(self.subsets, self.gains)):
            coupling = self.coefficients[p] * d2[p] * xi * xi * (g @ u[idx])
            if coupling != 0.0:
                out[idx] += coupling * g
        return out / self.scale
