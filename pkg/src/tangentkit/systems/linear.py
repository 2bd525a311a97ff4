"""Linear systems F(w) = A w: constant Jacobian, zero curvature."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .base import SmoothSystem

__all__ = ["LinearSystem"]


class LinearSystem(SmoothSystem):
    """F(w) = A w for a fixed n x m matrix A."""

    def __init__(self, matrix: np.ndarray):
        A = np.array(matrix, dtype=np.float64)
        if A.ndim != 2:
            raise ContractError(f"matrix must be 2-D, got shape {A.shape}")
        A.setflags(write=False)
        self._A = A
        self.n_outputs, self.n_params = A.shape
        self.activation = None

    @classmethod
    def random(cls, n: int, m: int, seed: int) -> "LinearSystem":
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((n, m)))

    @property
    def matrix(self) -> np.ndarray:
        return self._A

    def evaluate(self, w: np.ndarray) -> np.ndarray:
        w = self.check_params(w)
        return self._A @ w

    def jacobian(self, w: np.ndarray) -> np.ndarray:
        self.check_params(w)
        return self._A

    def hvp_per_output(self, w: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        self.check_params(w)
        if not 0 <= index < self.n_outputs:
            raise ContractError(f"output index {index} out of range [0, {self.n_outputs})")
        return np.zeros(self.n_params)

    def hvp_all_outputs(self, w: np.ndarray, U: np.ndarray) -> np.ndarray:
        self.check_params(w)
        return np.zeros((self.n_outputs, self.n_params))

    def tangent_gram(self, w: np.ndarray) -> np.ndarray:
        self.check_params(w)
        return self._A @ self._A.T

    def exact_hessian_tensor_norm(self) -> float:
        return 0.0

    def exact_ball_lipschitz(self, w0: np.ndarray, radius: float) -> float:
        return float(np.linalg.norm(self._A, 2))
