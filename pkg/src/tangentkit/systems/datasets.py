"""Datasets: fixed regression pairs the systems bind to.

The scalar generator draws x ~ U[0,1] and labels with the affine rule
y = 2x + 1/2. The d-dimensional generator extends it minimally:
x ~ U[0,1]^d, y = 2 * mean(x) + 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

__all__ = ["Dataset", "synthetic_dataset", "box_dataset"]


@dataclass(frozen=True)
class Dataset:
    """inputs: (n, d) array; targets: (n,) array."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if inputs.ndim != 2:
            raise ContractError(f"inputs must be 2-D (n, d), got shape {inputs.shape}")
        if targets.shape != (inputs.shape[0],):
            raise ContractError(
                f"{inputs.shape[0]} inputs but {targets.shape} targets"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def scalar_inputs(self) -> np.ndarray:
        """The (n,) input vector for d=1 datasets."""
        if self.dim != 1:
            raise ContractError(f"dataset has input dimension {self.dim}, need 1")
        return self.inputs[:, 0]


def synthetic_dataset(n: int, seed: int) -> Dataset:
    """n scalar pairs with x ~ U[0,1] and y = 2x + 1/2 exactly."""
    if n < 1:
        raise ContractError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, 1))
    return Dataset(x, 2.0 * x[:, 0] + 0.5)


def box_dataset(n: int, dim: int, seed: int) -> Dataset:
    """n points uniform on [0,1]^dim with y = 2*mean(x) + 1/2."""
    if n < 1 or dim < 1:
        raise ContractError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, dim))
    return Dataset(x, 2.0 * x.mean(axis=1) + 0.5)
