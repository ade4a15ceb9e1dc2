"""First-order solvers with iteration logging."""

from inverselab.solve.schemas import (
    IterationLog,
    IterationRecord,
    NotPositiveDefiniteError,
    SolverConfig,
    SolverStatus,
    StepConditionError,
)
from inverselab.solve.service import (
    admm,
    chambolle_pock,
    conjugate_gradient,
    gradient_descent,
    ista,
    least_squares_gradient,
    pnp_pgd,
    proximal_gradient,
    proximal_point,
    tv_reconstruct,
)

__all__ = [
    "IterationLog",
    "IterationRecord",
    "NotPositiveDefiniteError",
    "SolverConfig",
    "SolverStatus",
    "StepConditionError",
    "admm",
    "chambolle_pock",
    "conjugate_gradient",
    "gradient_descent",
    "ista",
    "least_squares_gradient",
    "pnp_pgd",
    "proximal_gradient",
    "proximal_point",
    "tv_reconstruct",
]
