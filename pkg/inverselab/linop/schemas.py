"""Types for matrix-free linear operators and singular systems."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

Vector = np.ndarray


class DimensionMismatchError(ValueError):
    """Raised when a vector does not match an operator dimension."""

    def __init__(self, what: str, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected length {expected}, got {actual}")


class SvdConvergenceError(RuntimeError):
    """Raised when Jacobi sweeps fail to orthogonalize the columns.

    Attributes:
        residual: Largest remaining relative column inner product.
        sweeps: Number of sweeps performed.
    """

    def __init__(self, residual: float, sweeps: int):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})"
        )


@dataclass(frozen=True)
class LinearMap:
    """A real linear operator given by its action and the action of its adjoint.

    Attributes:
        rows: Output dimension.
        cols: Input dimension.
        matvec: x (cols) -> A x (rows).
        rmatvec: y (rows) -> A^T y (cols).
        dense_view: Optional row-major matrix the operator agrees with.
        name: Short label used in logs.
    """

    rows: int
    cols: int
    matvec: Callable[[Vector], Vector]
    rmatvec: Callable[[Vector], Vector]
    dense_view: np.ndarray | None = None
    name: str = "linear_map"

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols) of the operator."""
        return (self.rows, self.cols)


class SvdFactorization(BaseModel):
    """Truncated singular system of a matrix.

    Column ``i`` of ``left_vectors`` is v_i (data space), column ``i`` of
    ``right_vectors`` is u_i (solution space), so that A u_i = s_i v_i.

    Attributes:
        left_vectors: rows x rank matrix of orthonormal columns.
        right_vectors: cols x rank matrix of orthonormal columns.
        singular_values: Strictly positive, non-increasing.
        rows: Row count of the factorized matrix.
        cols: Column count of the factorized matrix.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    left_vectors: np.ndarray
    right_vectors: np.ndarray
    singular_values: np.ndarray
    rows: int
    cols: int

    @model_validator(mode="after")
    def _check_shapes(self) -> "SvdFactorization":
        r = self.singular_values.shape[0]
        if self.left_vectors.shape != (self.rows, r):
            raise ValueError(f"left_vectors must be {self.rows}x{r}")
        if self.right_vectors.shape != (self.cols, r):
            raise ValueError(f"right_vectors must be {self.cols}x{r}")
        if r and (np.any(self.singular_values <= 0) or np.any(np.diff(self.singular_values) > 0)):
            raise ValueError("singular values must be positive and non-increasing")
        return self

    @property
    def rank(self) -> int:
        """Number of stored singular triples."""
        return int(self.singular_values.shape[0])

    def reconstruct(self) -> np.ndarray:
        """Assemble sum_i s_i v_i u_i^T."""
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T

