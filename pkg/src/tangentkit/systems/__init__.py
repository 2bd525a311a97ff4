"""Model families with hand-derived first and second derivatives."""

from __future__ import annotations

import numpy as np

from .base import SmoothSystem
from .datasets import Dataset, box_dataset, synthetic_dataset
from .deep import DeepMLP
from .linear import LinearSystem
from .oracles import (
    fd_hessian_output,
    fd_jacobian,
    fd_loss_gradient,
    fd_loss_hessian,
    fd_steps,
)
from .quadratic import QuadraticSystem
from .shallow import ShallowNet
from .sparse import SparseAdditiveModel
from .transformed import TransformedSystem

__all__ = [
    "SmoothSystem",
    "Dataset",
    "synthetic_dataset",
    "box_dataset",
    "LinearSystem",
    "QuadraticSystem",
    "ShallowNet",
    "DeepMLP",
    "SparseAdditiveModel",
    "TransformedSystem",
    "gaussian_init",
    "fd_steps",
    "fd_jacobian",
    "fd_hessian_output",
    "fd_loss_gradient",
    "fd_loss_hessian",
]


def gaussian_init(system: SmoothSystem, seed: int) -> np.ndarray:
    """Seeded standard-normal parameter draw for any system.

    Delegates to the family's own layout-aware initializer (sign vectors
    and per-layer draw order are family-specific).
    """
    return system.init_params(seed)
