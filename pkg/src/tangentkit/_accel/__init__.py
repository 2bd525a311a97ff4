"""Backend selection for the fused kernel-drift training loop.

The width sweep retrains one shallow network per (family, width, seed)
cell and recomputes the n x n tangent kernel every few iterations, which
is the only hot loop in the package. Two interchangeable implementations
exist: a numba-jitted one and a vectorized pure-numpy one. Selection
order: an explicit set_backend() call wins, then the TANGENTKIT_BACKEND
environment variable (auto | numba | numpy), then auto, which means
numba when importable and numpy otherwise.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ContractError

BACKENDS = ("auto", "numba", "numpy")

try:
    from . import drift_numba

    NUMBA_AVAILABLE = drift_numba.NUMBA_AVAILABLE
except ImportError:  # pragma: no cover - numba genuinely absent
    drift_numba = None
    NUMBA_AVAILABLE = False

from . import drift_numpy

_forced: str | None = None


def set_backend(name: str | None) -> None:
    """Force a backend for this process; None restores env/auto resolution."""
    global _forced
    if name is not None and name not in BACKENDS:
        raise ContractError(f"backend must be one of {BACKENDS}, got {name!r}")
    _forced = name


def active_backend() -> str:
    """The backend drift_run would use right now ('numba' or 'numpy')."""
    choice = _forced if _forced is not None else os.environ.get("TANGENTKIT_BACKEND", "auto")
    if choice not in BACKENDS:
        raise ContractError(
            f"TANGENTKIT_BACKEND must be one of {BACKENDS}, got {choice!r}"
        )
    if choice == "auto":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if choice == "numba" and not NUMBA_AVAILABLE:
        raise ContractError("backend 'numba' requested but numba is not importable")
    return choice


def drift_run(
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    v: np.ndarray,
    act_code: int,
    out_code: int,
    eta: float,
    max_iters: int,
    loss_tol: float,
    stride: int,
):
    """Train a shallow net by full-batch GD, tracking relative kernel drift.

    Returns (params, record_t, record_delta, record_loss, status, iters)
    where params is the final (w, b, v) triple, the record arrays cover
    iteration 0, every stride-th iteration, and the stopping iteration,
    and status is 0 (loss < loss_tol), 1 (iteration cap), or 2 (diverged:
    non-finite or > 1e12 loss).
    """
    if stride < 1:
        raise ContractError(f"stride must be >= 1, got {stride}")
    if max_iters < 0:
        raise ContractError(f"max_iters must be >= 0, got {max_iters}")
    runner = (
        drift_numba.drift_loop if active_backend() == "numba" else drift_numpy.drift_loop
    )
    cap = max_iters // stride + 3
    rec_t = np.zeros(cap, dtype=np.int64)
    rec_delta = np.zeros(cap, dtype=np.float64)
    rec_loss = np.zeros(cap, dtype=np.float64)
    w = np.array(w, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    v = np.array(v, dtype=np.float64)
    n_rec, status, iters = runner(
        np.asarray(x, dtype=np.float64),
        np.asarray(y, dtype=np.float64),
        w,
        b,
        v,
        act_code,
        out_code,
        eta,
        max_iters,
        loss_tol,
        stride,
        rec_t,
        rec_delta,
        rec_loss,
    )
    return (w, b, v), rec_t[:n_rec], rec_delta[:n_rec], rec_loss[:n_rec], status, iters


__all__ = [
    "BACKENDS",
    "NUMBA_AVAILABLE",
    "set_backend",
    "active_backend",
    "drift_run",
]
