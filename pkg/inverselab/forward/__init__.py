"""Discrete forward operators exposed as linear maps."""

from inverselab.forward.schemas import (
    BoundaryRule,
    DiscretizationMismatchError,
    Grid2D,
    GridError,
    Kernel2D,
    KernelError,
    Sinogram,
)
from inverselab.forward.service import (
    backward_difference_operator,
    convolution_operator,
    convolve,
    convolve_adjoint,
    div2d,
    gaussian_kernel,
    grad2d,
    gradient_operator,
    integration_operator,
    radon,
    radon_adjoint,
    radon_operator,
    ray_matrix,
)

__all__ = [
    "BoundaryRule",
    "DiscretizationMismatchError",
    "Grid2D",
    "GridError",
    "Kernel2D",
    "KernelError",
    "Sinogram",
    "backward_difference_operator",
    "convolution_operator",
    "convolve",
    "convolve_adjoint",
    "div2d",
    "gaussian_kernel",
    "grad2d",
    "gradient_operator",
    "integration_operator",
    "radon",
    "radon_adjoint",
    "radon_operator",
    "ray_matrix",
]
