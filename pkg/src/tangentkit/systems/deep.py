"""Multi-layer perceptrons with per-layer 1/sqrt(fan-in) scaling.

Architecture: depth L >= 2 weight matrices, uniform hidden width m,
scalar output, no biases. The forward pass is

    a0 = x,   zl = W_l a_{l-1} / sqrt(m_{l-1}),   al = sigma(zl),

with m_0 = d, m_1 = ... = m_{L-1} = m, m_L = 1; the output is z_L (the
last layer stays linear). Parameters are the flat concatenation of the
raveled layer matrices, and the tuple norm used for ball radii is the
SUM of per-layer Frobenius norms, not the norm of the flat vector.
"""

from __future__ import annotations

import numpy as np

from ..activations import Activation, get_activation
from ..errors import ContractError
from ..numerics import power_iteration
from .base import SmoothSystem

__all__ = ["DeepMLP"]


class DeepMLP(SmoothSystem):
    """Depth-L MLP bound to a fixed input batch.

    Parameters
    ----------
    depth : int
        Number of weight matrices L, at least 2.
    width : int
        Uniform hidden width m.
    activation : str | Activation
        Hidden activation (the output layer is linear).
    inputs : array, shape (n, d)
        Fixed evaluation points.
    """

    def __init__(
        self,
        depth: int,
        width: int,
        activation: str | Activation,
        inputs: np.ndarray,
    ):
        if depth < 2:
            raise ContractError(f"depth must be >= 2, got {depth}")
        if width < 1:
            raise ContractError(f"width must be >= 1, got {width}")
        X = np.asarray(inputs, dtype=np.float64)
        if X.ndim != 2:
            raise ContractError(f"inputs must be 2-D (n, d), got shape {X.shape}")
        act = get_activation(activation) if isinstance(activation, str) else activation

        self.depth = depth
        self.width = width
        self.activation = act
        self.inputs = X
        self.n_outputs, self.input_dim = X.shape
        # fan-in m_{l-1} and fan-out m_l of each layer l = 1..L
        dims = [self.input_dim] + [width] * (depth - 1) + [1]
        self.layer_shapes = [(dims[l + 1], dims[l]) for l in range(depth)]
        self._scales = np.sqrt([float(dims[l]) for l in range(depth)])
        self._offsets = np.cumsum([0] + [r * c for r, c in self.layer_shapes])
        self.n_params = int(self._offsets[-1])

    # ------------------------------------------------------------------
    # parameter layout
    # ------------------------------------------------------------------
    def split(self, theta: np.ndarray) -> list[np.ndarray]:
        """Per-layer matrix views of a flat parameter vector."""
        theta = np.asarray(theta, dtype=np.float64)
        return [
            theta[self._offsets[l] : self._offsets[l + 1]].reshape(self.layer_shapes[l])
            for l in range(self.depth)
        ]

    def flatten(self, layers: list[np.ndarray]) -> np.ndarray:
        return np.concatenate([W.ravel() for W in layers])

    def init_params(self, seed: int) -> np.ndarray:
        """Standard-normal entries, drawn layer by layer in order."""
        rng = np.random.default_rng(seed)
        return np.concatenate(
            [rng.standard_normal(r * c) for r, c in self.layer_shapes]
        )

    def tuple_norm(self, theta: np.ndarray, reference: np.ndarray | None = None) -> float:
        """Sum of per-layer Frobenius norms, optionally of theta - reference."""
        delta = theta if reference is None else np.asarray(theta) - np.asarray(reference)
        return float(sum(np.linalg.norm(W) for W in self.split(delta)))

    def layer_spectral_norms(self, theta: np.ndarray, seed: int = 0) -> np.ndarray:
        """||W_l||_2 per layer, via power iteration on W^T W."""
        theta = self.check_params(theta)
        norms = []
        for l, W in enumerate(self.split(theta)):
            res = power_iteration(lambda v: W.T @ (W @ v), W.shape[1], seed=seed + l)
            norms.append(float(np.sqrt(max(res.value, 0.0))))
        return np.array(norms)

    # ------------------------------------------------------------------
    # batched forward / backward
    # ------------------------------------------------------------------
    def _forward(self, layers: list[np.ndarray]) -> tuple[list, list]:
        """Activations A[l] (m_l, n) for l = 0..L-1 and preactivations Z[l]."""
        A = [self.inputs.T]
        Z = [None]
        for l in range(self.depth):
            z = layers[l] @ A[l] / self._scales[l]
            Z.append(z)
            A.append(self.activation.fn(z) if l < self.depth - 1 else z)
        return A, Z

    def _backward(self, layers: list[np.ndarray], Z: list) -> list:
        """Sensitivities C[l] = df/dz_l, shape (m_l, n), for l = 1..L."""
        n = self.n_outputs
        C: list = [None] * (self.depth + 1)
        C[self.depth] = np.ones((1, n))
        for l in range(self.depth - 1, 0, -1):
            C[l] = self.activation.deriv(Z[l]) * (layers[l].T @ C[l + 1]) / self._scales[l]
        return C

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        A, _ = self._forward(self.split(theta))
        return A[-1][0].copy()

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        layers = self.split(theta)
        A, Z = self._forward(layers)
        C = self._backward(layers, Z)
        n = self.n_outputs
        J = np.empty((n, self.n_params))
        for l in range(self.depth):
            # df_i/dW_l is the rank-1 matrix C[l+1][:,i] A[l][:,i]^T / scale
            block = np.einsum("ri,ci->irc", C[l + 1], A[l]) / self._scales[l]
            J[:, self._offsets[l] : self._offsets[l + 1]] = block.reshape(n, -1)
        return J

    def gradient_layer_norms(self, theta: np.ndarray) -> np.ndarray:
        """||df_i/dW_l||_F, shape (n, L), without materializing the Jacobian."""
        theta = self.check_params(theta)
        layers = self.split(theta)
        A, Z = self._forward(layers)
        C = self._backward(layers, Z)
        norms = np.empty((self.n_outputs, self.depth))
        for l in range(self.depth):
            norms[:, l] = (
                np.linalg.norm(C[l + 1], axis=0)
                * np.linalg.norm(A[l], axis=0)
                / self._scales[l]
            )
        return norms

    def tangent_gram(self, theta: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        layers = self.split(theta)
        A, Z = self._forward(layers)
        C = self._backward(layers, Z)
        n = self.n_outputs
        K = np.zeros((n, n))
        for l in range(self.depth):
            K += (C[l + 1].T @ C[l + 1]) * (A[l].T @ A[l]) / self._scales[l] ** 2
        return K

    def vjp(self, theta: np.ndarray, r: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        r = np.asarray(r, dtype=np.float64)
        layers = self.split(theta)
        A, Z = self._forward(layers)
        C = self._backward(layers, Z)
        out = np.empty(self.n_params)
        for l in range(self.depth):
            block = (C[l + 1] * r[None, :]) @ A[l].T / self._scales[l]
            out[self._offsets[l] : self._offsets[l + 1]] = block.ravel()
        return out

    def jvp(self, theta: np.ndarray, u: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        layers = self.split(theta)
        U = self.split(np.asarray(u, dtype=np.float64))
        A, Z = self._forward(layers)
        T = np.zeros_like(A[0])
        for l in range(self.depth):
            tau = (layers[l] @ T + U[l] @ A[l]) / self._scales[l]
            T = self.activation.deriv(Z[l + 1]) * tau if l < self.depth - 1 else tau
        return T[0].copy()

    # ------------------------------------------------------------------
    # exact Hessian-vector products (forward-over-reverse)
    # ------------------------------------------------------------------
    def hvp_per_output(self, theta: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        if not 0 <= index < self.n_outputs:
            raise ContractError(f"output index {index} out of range [0, {self.n_outputs})")
        self.require_smooth()
        theta = self.check_params(theta)
        layers = self.split(theta)
        U = self.split(np.asarray(u, dtype=np.float64))
        L = self.depth
        x = self.inputs[index]

        # forward with directional tangents t_l = d a_l / d eps
        a = [x]
        z: list = [None]
        t = [np.zeros_like(x)]
        tau: list = [None]
        for l in range(L):
            zl = layers[l] @ a[l] / self._scales[l]
            tl = (layers[l] @ t[l] + U[l] @ a[l]) / self._scales[l]
            z.append(zl)
            tau.append(tl)
            if l < L - 1:
                a.append(self.activation.fn(zl))
                t.append(self.activation.deriv(zl) * tl)
            else:
                a.append(zl)
                t.append(tl)

        # reverse sensitivities c_l = df/dz_l and their tangents
        c: list = [None] * (L + 1)
        cdot: list = [None] * (L + 1)
        c[L] = np.ones(1)
        cdot[L] = np.zeros(1)
        for l in range(L - 1, 0, -1):
            s = layers[l].T @ c[l + 1] / self._scales[l]
            sdot = (U[l].T @ c[l + 1] + layers[l].T @ cdot[l + 1]) / self._scales[l]
            d1 = self.activation.deriv(z[l])
            c[l] = d1 * s
            cdot[l] = self.activation.second_deriv(z[l]) * tau[l] * s + d1 * sdot

        out = np.empty(self.n_params)
        for l in range(L):
            block = (np.outer(cdot[l + 1], a[l]) + np.outer(c[l + 1], t[l])) / self._scales[l]
            out[self._offsets[l] : self._offsets[l + 1]] = block.ravel()
        return out
