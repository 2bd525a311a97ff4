"""Shared numerical machinery: symmetric eigen-extremes, power iteration,
Lanczos, and uniform ball sampling."""

from .eigen import (
    PowerIterationResult,
    LanczosResult,
    symmetric_extremes,
    dense_extremes,
    lanczos_extremes,
    power_iteration,
    spectral_norm_squared_action,
    lambda_min_shifted,
    DENSE_EIGEN_LIMIT,
)
from .sampling import sample_in_ball, sample_unit_directions

__all__ = [
    "PowerIterationResult",
    "LanczosResult",
    "symmetric_extremes",
    "dense_extremes",
    "lanczos_extremes",
    "power_iteration",
    "spectral_norm_squared_action",
    "lambda_min_shifted",
    "DENSE_EIGEN_LIMIT",
    "sample_in_ball",
    "sample_unit_directions",
]
