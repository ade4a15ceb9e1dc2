"""Schemas for discrete forward operators."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class GridError(ValueError):
    """Raised for invalid grid sizes or operator dimensions."""


class KernelError(ValueError):
    """Raised for malformed or oversized convolution kernels."""


class DiscretizationMismatchError(ValueError):
    """Raised when a sinogram does not belong to the requested discretization."""


class BoundaryRule(str, Enum):
    """How an image is continued outside its support during convolution."""

    ZERO = "zero"
    CIRCULAR = "circular"
    REFLECT = "reflect"


class Grid2D(BaseModel):
    """Cell-centered equidistant grid.

    Cell ``(i, j)`` (1-based) has center ``(a1 + (i - 1/2) h1, a2 + (j - 1/2) h2)``.
    Axis 0 of an image array runs along x, axis 1 along y.
    """

    model_config = ConfigDict(frozen=True)

    m1: int = Field(..., ge=1)
    m2: int = Field(..., ge=1)
    h1: float = Field(..., gt=0)
    h2: float = Field(..., gt=0)
    a1: float = 0.0
    a2: float = 0.0

    @classmethod
    def centered(cls, m1: int, m2: int | None = None, half_width: float = 1.0) -> "Grid2D":
        """Grid covering [-half_width, half_width]^2 with m1 x m2 cells."""
        m2 = m1 if m2 is None else m2
        return cls(
            m1=m1,
            m2=m2,
            h1=2.0 * half_width / m1,
            h2=2.0 * half_width / m2,
            a1=-half_width,
            a2=-half_width,
        )

    @property
    def shape(self) -> tuple[int, int]:
        """Image array shape (m1, m2)."""
        return (self.m1, self.m2)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates along x and y."""
        x = self.a1 + (np.arange(1, self.m1 + 1) - 0.5) * self.h1
        y = self.a2 + (np.arange(1, self.m2 + 1) - 0.5) * self.h2
        return x, y


class Kernel2D(BaseModel):
    """Square convolution kernel indexed by offsets -r..r on each axis.

    ``weights[r + i, r + j]`` is g(i, j).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    radius: int = Field(..., ge=0)
    weights: np.ndarray

    @model_validator(mode="after")
    def _check_weights(self) -> "Kernel2D":
        side = 2 * self.radius + 1
        if self.weights.shape != (side, side):
            raise ValueError(f"kernel of radius {self.radius} must be {side}x{side}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("kernel weights must be finite")
        return self

    @classmethod
    def delta(cls) -> "Kernel2D":
        """The identity kernel."""
        return cls(radius=0, weights=np.ones((1, 1)))


class Sinogram(BaseModel):
    """Line integrals indexed by (angle, offset).

    Attributes:
        angles: Ray angles phi in radians.
        offsets: Signed distances s of the rays from the origin.
        values: len(angles) x len(offsets) array.
        grid: Image grid the sinogram was computed on.
        node_spacing: Quadrature spacing along rays, relative to min(h1, h2).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    angles: np.ndarray
    offsets: np.ndarray
    values: np.ndarray
    grid: Grid2D
    node_spacing: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _check_dimensions(self) -> "Sinogram":
        expected = (self.angles.shape[0], self.offsets.shape[0])
        if self.values.shape != expected:
            raise ValueError(f"sinogram values must be {expected[0]}x{expected[1]}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sinogram values must be finite")
        return self
