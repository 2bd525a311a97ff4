"""tangentkit: tangent-kernel conditioning analysis for smooth systems.

The package treats a model as a smooth map F: R^m -> R^n evaluated on a
fixed dataset and studies the square loss through the tangent kernel
K(w) = dF dF^T: uniform conditioning certificates, Hessian-norm bounds
that control how far K can move inside a ball, step-size prescriptions
with convergence-rate checks, and comparisons against the linearized
dynamics.
"""

from ._accel import NUMBA_AVAILABLE, active_backend, set_backend
from .activations import ACTIVATION_KINDS, Activation, get_activation
from .conditioning import (
    ConditioningCertificate,
    ConstantsEstimate,
    TangentKernel,
    certify_ball,
    estimate_constants,
    pl_star_ratio,
    tangent_kernel,
    transformed_kernel,
)
from .errors import (
    CapacityError,
    ContractError,
    PreconditionError,
    UnsupportedOperationError,
)
from .hessian import (
    CurvatureProbeResult,
    DeepBounds,
    HessianNormEstimate,
    KernelChangeReport,
    deep_bounds,
    hessian_tensor_norm,
    kernel_change_bound_check,
    nonconvexity_probe,
    sparse_hessian_bound,
    width_requirement,
)
from .linearize import DivergenceReport, LinearizedSystem, compare_dynamics, linearize_at
from .optimize import (
    GDPrescription,
    RateReport,
    SGDPrescription,
    Trajectory,
    prescribe_gd,
    prescribe_sgd,
    run_gd,
    run_sgd,
    verify_rate,
)
from .systems import (
    Dataset,
    DeepMLP,
    LinearSystem,
    QuadraticSystem,
    ShallowNet,
    SmoothSystem,
    SparseAdditiveModel,
    TransformedSystem,
    box_dataset,
    gaussian_init,
    synthetic_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "NUMBA_AVAILABLE",
    "active_backend",
    "set_backend",
    "ACTIVATION_KINDS",
    "Activation",
    "get_activation",
    "TangentKernel",
    "ConditioningCertificate",
    "ConstantsEstimate",
    "tangent_kernel",
    "pl_star_ratio",
    "certify_ball",
    "estimate_constants",
    "transformed_kernel",
    "CapacityError",
    "ContractError",
    "PreconditionError",
    "UnsupportedOperationError",
    "HessianNormEstimate",
    "CurvatureProbeResult",
    "KernelChangeReport",
    "DeepBounds",
    "hessian_tensor_norm",
    "kernel_change_bound_check",
    "nonconvexity_probe",
    "sparse_hessian_bound",
    "deep_bounds",
    "width_requirement",
    "LinearizedSystem",
    "DivergenceReport",
    "linearize_at",
    "compare_dynamics",
    "GDPrescription",
    "SGDPrescription",
    "Trajectory",
    "RateReport",
    "prescribe_gd",
    "run_gd",
    "prescribe_sgd",
    "run_sgd",
    "verify_rate",
    "SmoothSystem",
    "Dataset",
    "synthetic_dataset",
    "box_dataset",
    "gaussian_init",
    "LinearSystem",
    "QuadraticSystem",
    "ShallowNet",
    "DeepMLP",
    "SparseAdditiveModel",
    "TransformedSystem",
]
