"""One-hidden-layer networks with 1/sqrt(width) output scaling.

Two parameterizations are supported, selected by ``trainable``:

* ``"w"``    — only the hidden weights train; the sign vector v is fixed
               and there are no biases. f(w; x) = (1/sqrt(m)) sum_k v_k
               sigma(w_k x). Per-output Hessians are diagonal.
* ``"wvb"``  — hidden weights, biases, and output coefficients all train:
               f(w, b, v; x) = (1/sqrt(m)) sum_k v_k sigma(w_k x + b_k).
               Parameter layout is [w | b | v], three blocks of length m.

Inputs are scalar (the family is defined for one-dimensional data).
"""

from __future__ import annotations

import numpy as np

from ..activations import Activation, get_activation
from ..errors import ContractError
from .base import SmoothSystem

__all__ = ["ShallowNet"]

_VARIANTS = ("w", "wvb")


class ShallowNet(SmoothSystem):
    """Shallow network bound to fixed scalar inputs.

    Parameters
    ----------
    width : int
        Hidden-unit count m.
    activation : str | Activation
        Hidden activation.
    inputs : array, shape (n,)
        Scalar data points the outputs are evaluated at.
    trainable : {"w", "wvb"}
        Parameterization (see module docstring).
    fixed_v : array, shape (m,), optional
        Sign vector for the "w" variant; defaults to alternating +1/-1 so
        that unseeded constructions are deterministic.
    """

    def __init__(
        self,
        width: int,
        activation: str | Activation,
        inputs: np.ndarray,
        trainable: str = "wvb",
        fixed_v: np.ndarray | None = None,
    ):
        if width < 1:
            raise ContractError(f"width must be >= 1, got {width}")
        if trainable not in _VARIANTS:
            raise ContractError(f"trainable must be one of {_VARIANTS}, got {trainable!r}")
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 1:
            raise ContractError(f"inputs must be 1-D scalars, got shape {x.shape}")
        act = get_activation(activation) if isinstance(activation, str) else activation

        self.width = width
        self.activation = act
        self.trainable = trainable
        self.x = x
        self.n_outputs = x.shape[0]
        self.n_params = 3 * width if trainable == "wvb" else width
        self._sqrt_m = np.sqrt(float(width))

        if trainable == "w":
            if fixed_v is None:
                v = np.where(np.arange(width) % 2 == 0, 1.0, -1.0)
            else:
                v = np.asarray(fixed_v, dtype=np.float64)
                if v.shape != (width,) or not np.all(np.abs(v) == 1.0):
                    raise ContractError("fixed_v must be a (width,) vector of +/-1")
            self.fixed_v = v
        else:
            if fixed_v is not None:
                raise ContractError("fixed_v only applies to the trainable='w' variant")
            self.fixed_v = None

    # ------------------------------------------------------------------
    # parameter block helpers
    # ------------------------------------------------------------------
    def split(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(w, b, v) views of a flat parameter vector."""
        m = self.width
        if self.trainable == "w":
            return theta, np.zeros(m), self.fixed_v
        return theta[:m], theta[m : 2 * m], theta[2 * m :]

    def init_params(self, seed: int) -> np.ndarray:
        """w ~ N(0,1); biases (when trainable) ~ N(0,1); v uniform +/-1."""
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(self.width)
        if self.trainable == "w":
            return w
        b = rng.standard_normal(self.width)
        v = rng.choice(np.array([-1.0, 1.0]), size=self.width)
        return np.concatenate([w, b, v])

    def _preactivations(self, theta: np.ndarray) -> tuple[np.ndarray, ...]:
        w, b, v = self.split(theta)
        z = np.outer(self.x, w) + b[None, :]
        return z, w, b, v

    # ------------------------------------------------------------------
    # evaluation and first derivatives
    # ------------------------------------------------------------------
    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        z, _, _, v = self._preactivations(theta)
        return self.activation.fn(z) @ v / self._sqrt_m

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        return self.jacobian_info(theta)[0]

    def jacobian_info(self, theta: np.ndarray) -> tuple[np.ndarray, dict]:
        """(J, metadata). For relu, metadata counts preactivations at the
        kink z=0, where the one-sided convention sigma'(0)=0 applies."""
        theta = self.check_params(theta)
        z, _, _, v = self._preactivations(theta)
        info: dict = {}
        if self.activation.kind == "relu":
            info["relu_zero_preactivations"] = int(np.count_nonzero(z == 0.0))
        d1 = self.activation.deriv(z)
        P = d1 * v[None, :]
        Jw = P * self.x[:, None] / self._sqrt_m
        if self.trainable == "w":
            return Jw, info
        Jb = P / self._sqrt_m
        Jv = self.activation.fn(z) / self._sqrt_m
        return np.concatenate([Jw, Jb, Jv], axis=1), info

    def jvp(self, theta: np.ndarray, u: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        u = np.asarray(u, dtype=np.float64)
        z, _, _, v = self._preactivations(theta)
        P = self.activation.deriv(z) * v[None, :]
        if self.trainable == "w":
            return (P * self.x[:, None]) @ u / self._sqrt_m
        m = self.width
        uw, ub, uv = u[:m], u[m : 2 * m], u[2 * m :]
        out = (P * self.x[:, None]) @ uw + P @ ub + self.activation.fn(z) @ uv
        return out / self._sqrt_m

    def vjp(self, theta: np.ndarray, r: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        r = np.asarray(r, dtype=np.float64)
        z, _, _, v = self._preactivations(theta)
        P = self.activation.deriv(z) * v[None, :]
        gw = (P * self.x[:, None]).T @ r / self._sqrt_m
        if self.trainable == "w":
            return gw
        gb = P.T @ r / self._sqrt_m
        gv = self.activation.fn(z).T @ r / self._sqrt_m
        return np.concatenate([gw, gb, gv])

    # ------------------------------------------------------------------
    # second derivatives
    # ------------------------------------------------------------------
    def hvp_per_output(self, theta: np.ndarray, index: int, u: np.ndarray) -> np.ndarray:
        if not 0 <= index < self.n_outputs:
            raise ContractError(f"output index {index} out of range [0, {self.n_outputs})")
        U = np.asarray(u, dtype=np.float64)[None, :]
        return self._hvp_rows(theta, U, np.array([index]))[0]

    def hvp_all_outputs(self, theta: np.ndarray, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U, dtype=np.float64)
        return self._hvp_rows(theta, U, np.arange(self.n_outputs))

    def _hvp_rows(self, theta: np.ndarray, U: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """H_{rows[i]}(theta) U[i] stacked, shape (len(rows), n_params).

        Per-unit 3x3 curvature blocks of the wvb variant, broadcast over
        the requested outputs; the w variant is the diagonal special case.
        """
        self.require_smooth()
        theta = self.check_params(theta)
        z, _, _, v = self._preactivations(theta)
        z = z[rows]
        xs = self.x[rows][:, None]
        d2 = self.activation.second_deriv(z)
        if self.trainable == "w":
            return v[None, :] * d2 * xs * xs * U / self._sqrt_m
        m = self.width
        d1 = self.activation.deriv(z)
        uw, ub, uv = U[:, :m], U[:, m : 2 * m], U[:, 2 * m :]
        vd2 = v[None, :] * d2
        hw = vd2 * xs * xs * uw + vd2 * xs * ub + d1 * xs * uv
        hb = vd2 * xs * uw + vd2 * ub + d1 * uv
        hv = d1 * xs * uw + d1 * ub
        return np.concatenate([hw, hb, hv], axis=1) / self._sqrt_m

    # ------------------------------------------------------------------
    # kernel fast path
    # ------------------------------------------------------------------
    def tangent_gram(self, theta: np.ndarray) -> np.ndarray:
        theta = self.check_params(theta)
        z, _, _, v = self._preactivations(theta)
        P = self.activation.deriv(z) * v[None, :]
        xxT = np.outer(self.x, self.x)
        if self.trainable == "w":
            return (P @ P.T) * xxT / self.width
        A = self.activation.fn(z)
        return ((P @ P.T) * (xxT + 1.0) + A @ A.T) / self.width
