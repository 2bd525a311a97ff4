"""Scalar activation functions with exact first and second derivatives.

Each activation carries its derivative bound L_sigma (sup |sigma'|) and its
smoothness constant beta_sigma (Lipschitz constant of sigma', i.e.
sup |sigma''|), which the bound calculators consume. ReLU has no second
derivative; its ``smoothness_constant`` is None and second-order code must
reject it.

The numeric constants below are exact where a closed form exists; the two
swish values were obtained from a dense scan of the closed-form derivative
expressions (the maxima are interior and unique):

    sup |swish'(z)|  = 1.0998393201214631...   (attained near z = 2.3994)
    sup |swish''(z)| = 1/2                      (attained at z = 0)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractError

__all__ = ["Activation", "get_activation", "ACTIVATION_KINDS"]

# Integer codes shared with the compiled kernels in _accel. Keep in sync.
ACT_IDENTITY = 0
ACT_TANH = 1
ACT_RELU = 2
ACT_SWISH = 3
ACT_SOFTPLUS = 4
ACT_QUADRATIC = 5
ACT_SCALED_TANH_3 = 6

# sup |tanh''| = 4/(3*sqrt(3)), attained at tanh(z) = 1/sqrt(3)
_TANH_BETA = 4.0 / (3.0 * math.sqrt(3.0))
# Frozen from the scan documented in the module docstring.
SWISH_LIPSCHITZ = 1.0998393201214631
SWISH_BETA = 0.5


@dataclass(frozen=True)
class Activation:
    """A scalar function sigma with exact derivative evaluators.

    Attributes
    ----------
    kind : str
        One of ACTIVATION_KINDS.
    fn, deriv, second_deriv : callable
        Vectorized evaluators for sigma, sigma', sigma''. ``second_deriv``
        is None when the function is not twice differentiable (relu).
    lipschitz_constant : float
        L_sigma with |sigma'(z)| <= L_sigma everywhere (math.inf when
        sigma' is unbounded, as for the quadratic function).
    smoothness_constant : float | None
        beta_sigma with |sigma'(a) - sigma'(b)| <= beta_sigma |a - b|;
        None when undefined.
    code : int
        Integer id used by the compiled kernels.
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    second_deriv: Callable[[np.ndarray], np.ndarray] | None
    lipschitz_constant: float
    smoothness_constant: float | None
    code: int

    @property
    def smooth(self) -> bool:
        return self.second_deriv is not None


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Evaluate on the negative half-line through exp(z)/(1+exp(z)) so the
    # exponential never overflows.
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _swish(z: np.ndarray) -> np.ndarray:
    return np.asarray(z, dtype=np.float64) * _sigmoid(z)


def _swish_d1(z: np.ndarray) -> np.ndarray:
    s = _sigmoid(z)
    return s + np.asarray(z, dtype=np.float64) * s * (1.0 - s)


def _swish_d2(z: np.ndarray) -> np.ndarray:
    s = _sigmoid(z)
    return s * (1.0 - s) * (2.0 + np.asarray(z, dtype=np.float64) * (1.0 - 2.0 * s))


def _tanh_d2(z: np.ndarray) -> np.ndarray:
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t * t)


_REGISTRY: dict[str, Activation] = {
    "identity": Activation(
        "identity",
        lambda z: np.asarray(z, dtype=np.float64),
        lambda z: np.ones_like(np.asarray(z, dtype=np.float64)),
        lambda z: np.zeros_like(np.asarray(z, dtype=np.float64)),
        1.0,
        0.0,
        ACT_IDENTITY,
    ),
    "tanh": Activation(
        "tanh",
        np.tanh,
        lambda z: 1.0 - np.tanh(z) ** 2,
        _tanh_d2,
        1.0,
        _TANH_BETA,
        ACT_TANH,
    ),
    # Non-differentiable at 0; convention sigma'(0) = 0.
    "relu": Activation(
        "relu",
        lambda z: np.maximum(np.asarray(z, dtype=np.float64), 0.0),
        lambda z: (np.asarray(z, dtype=np.float64) > 0).astype(np.float64),
        None,
        1.0,
        None,
        ACT_RELU,
    ),
    "swish": Activation(
        "swish",
        _swish,
        _swish_d1,
        _swish_d2,
        SWISH_LIPSCHITZ,
        SWISH_BETA,
        ACT_SWISH,
    ),
    "softplus": Activation(
        "softplus",
        _softplus,
        _sigmoid,
        lambda z: _sigmoid(z) * (1.0 - _sigmoid(z)),
        1.0,
        0.25,
        ACT_SOFTPLUS,
    ),
    "quadratic": Activation(
        "quadratic",
        lambda z: np.asarray(z, dtype=np.float64) ** 2,
        lambda z: 2.0 * np.asarray(z, dtype=np.float64),
        lambda z: np.full_like(np.asarray(z, dtype=np.float64), 2.0),
        math.inf,
        2.0,
        ACT_QUADRATIC,
    ),
    "scaled-tanh-3": Activation(
        "scaled-tanh-3",
        lambda z: 3.0 * np.tanh(z),
        lambda z: 3.0 * (1.0 - np.tanh(z) ** 2),
        lambda z: 3.0 * _tanh_d2(z),
        3.0,
        3.0 * _TANH_BETA,
        ACT_SCALED_TANH_3,
    ),
}

ACTIVATION_KINDS = tuple(sorted(_REGISTRY))


def get_activation(kind: str | Activation) -> Activation:
    """Look up an activation by kind name; Activation instances pass through."""
    if isinstance(kind, Activation):
        return kind
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise ContractError(
            f"unknown activation {kind!r}; expected one of {ACTIVATION_KINDS}"
        ) from None
