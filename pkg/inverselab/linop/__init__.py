"""Matrix-free linear operators, SVD and conditioning diagnostics."""

from inverselab.linop.schemas import (
    DimensionMismatchError,
    LinearMap,
    SvdConvergenceError,
    SvdFactorization,
    Vector,
)
from inverselab.linop.service import (
    adjoint_apply,
    adjoint_mismatch,
    apply,
    compose,
    condition_numbers,
    dense_matrix,
    from_matrix,
    identity_map,
    normal_operator,
    operator_norm,
    scale,
    stack,
    svd,
    zero_map,
)

__all__ = [
    "DimensionMismatchError",
    "LinearMap",
    "SvdConvergenceError",
    "SvdFactorization",
    "Vector",
    "adjoint_apply",
    "adjoint_mismatch",
    "apply",
    "compose",
    "condition_numbers",
    "dense_matrix",
    "from_matrix",
    "identity_map",
    "normal_operator",
    "operator_norm",
    "scale",
    "stack",
    "svd",
    "zero_map",
]
