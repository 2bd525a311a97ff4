"""Uniform sampling in parameter-space balls."""

from __future__ import annotations

import numpy as np

__all__ = ["sample_unit_directions", "sample_in_ball"]


def sample_unit_directions(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """(count, dim) rows uniform on the unit sphere (normalized Gaussians)."""
    d = rng.standard_normal((count, dim))
    norms = np.linalg.norm(d, axis=1, keepdims=True)
    # A zero draw has probability zero; guard anyway.
    norms[norms == 0] = 1.0
    return d / norms


def sample_in_ball(
    center: np.ndarray, radius: float, count: int, rng: np.random.Generator
) -> np.ndarray:
    """(count, dim) points uniform in the ball B(center, radius).

    Direction uniform on the sphere; radius scaled by u^(1/dim) for
    u ~ U[0,1], which makes the joint density uniform in the ball.
    """
    center = np.asarray(center, dtype=np.float64)
    dim = center.shape[0]
    dirs = sample_unit_directions(count, dim, rng)
    radii = radius * rng.uniform(size=(count, 1)) ** (1.0 / dim)
    return center[None, :] + dirs * radii
