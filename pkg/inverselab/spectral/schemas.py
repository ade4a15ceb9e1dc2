"""Schemas for spectral regularization."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class FilterLengthError(ValueError):
    """Raised when a learned filter does not match the singular system."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"learned filter has {actual} coefficients, singular system has {expected}"
        )


class NoFeasibleAlphaError(ValueError):
    """Raised when no alpha in the search range meets the discrepancy bound.

    Attributes:
        discrepancy: Residual norm at the smallest alpha searched.
        target: The bound mu * delta.
    """

    def __init__(self, discrepancy: float, target: float, alpha_min: float):
        self.discrepancy = discrepancy
        self.target = target
        super().__init__(
            f"no feasible alpha: discrepancy {discrepancy:.6g} at alpha={alpha_min:g} "
            f"exceeds mu*delta={target:.6g}"
        )


class SingularSystemError(ValueError):
    """Raised when a closed-form estimator meets a singular system."""


class StatisticsError(ValueError):
    """Raised when spectral statistics do not fit the singular system."""


class FilterKind(str, Enum):
    """Family of a spectral filter."""

    PSEUDO_INVERSE = "pseudo_inverse"
    TIKHONOV = "tikhonov"
    TSVD = "tsvd"
    LEARNED = "learned"


class SpectralFilter(BaseModel):
    """Rule sigma_i -> r(sigma_i) replacing 1/sigma_i in the pseudo-inverse expansion.

    Learned filters are stored per index, so equal singular values may carry
    different coefficients.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: FilterKind
    alpha: float | None = Field(None, gt=0)
    cut: float | None = Field(None, ge=0)
    theta: np.ndarray | None = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "SpectralFilter":
        if self.kind == FilterKind.TIKHONOV and self.alpha is None:
            raise ValueError("tikhonov filter needs alpha > 0")
        if self.kind == FilterKind.TSVD and self.cut is None:
            raise ValueError("tsvd filter needs a cut")
        if self.kind == FilterKind.LEARNED:
            if self.theta is None or self.theta.ndim != 1:
                raise ValueError("learned filter needs a 1-D coefficient vector")
            if not np.all(np.isfinite(self.theta)):
                raise ValueError("learned coefficients must be finite")
        return self

    @classmethod
    def pseudo_inverse(cls) -> "SpectralFilter":
        """r(sigma) = 1/sigma."""
        return cls(kind=FilterKind.PSEUDO_INVERSE)

    @classmethod
    def tikhonov(cls, alpha: float) -> "SpectralFilter":
        """r(sigma) = sigma / (sigma^2 + alpha)."""
        return cls(kind=FilterKind.TIKHONOV, alpha=alpha)

    @classmethod
    def tsvd(cls, cut: float) -> "SpectralFilter":
        """r(sigma) = 1/sigma for sigma >= cut, else 0."""
        return cls(kind=FilterKind.TSVD, cut=cut)

    @classmethod
    def learned(cls, theta: np.ndarray) -> "SpectralFilter":
        """Per-index coefficients theta_i."""
        return cls(kind=FilterKind.LEARNED, theta=np.array(theta, dtype=float))

    def coefficients(self, sigma: np.ndarray) -> np.ndarray:
        """Filter coefficients for every singular value.

        Raises:
            FilterLengthError: If a learned filter has the wrong length.
        """
        s = np.asarray(sigma, dtype=float)
        if self.kind == FilterKind.PSEUDO_INVERSE:
            return 1.0 / s
        if self.kind == FilterKind.TIKHONOV:
            return s / (s * s + self.alpha)
        if self.kind == FilterKind.TSVD:
            return np.where(s >= self.cut, 1.0 / s, 0.0)
        if self.theta.shape[0] != s.shape[0]:
            raise FilterLengthError(s.shape[0], self.theta.shape[0])
        return self.theta.copy()

    def coefficient(self, sigma: float, index: int) -> float:
        """Coefficient of a single singular value at position ``index``."""
        if self.kind == FilterKind.LEARNED:
            return float(self.theta[index])
        return float(self.coefficients(np.array([sigma]))[0])


class SpectralStatistics(BaseModel):
    """Per-mode noise energies Delta_i and prior energies Pi_i."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    delta: np.ndarray
    pi: np.ndarray

    @model_validator(mode="after")
    def _check_values(self) -> "SpectralStatistics":
        if self.delta.shape != self.pi.shape or self.delta.ndim != 1:
            raise ValueError("delta and pi must be 1-D of equal length")
        if np.any(self.delta < 0) or np.any(self.pi < 0):
            raise ValueError("noise and prior energies must be non-negative")
        return self


class MoorePenroseReport(BaseModel):
    """Maximum absolute deviation in each Moore-Penrose identity."""

    a_adag_a: float
    adag_a_adag: float
    adag_a_symmetry: float
    a_adag_symmetry: float
    tol: float

    @property
    def max_deviation(self) -> float:
        """Largest of the four deviations."""
        return max(self.a_adag_a, self.adag_a_adag, self.adag_a_symmetry, self.a_adag_symmetry)

    @property
    def passed(self) -> bool:
        """Whether every identity holds within ``tol``."""
        return self.max_deviation <= self.tol


class PicardEntry(BaseModel):
    """One row of the Picard table."""

    index: int
    sigma: float
    coefficient: float
    ratio: float
    partial_sum: float


class MorozovResult(BaseModel):
    """Outcome of the discrepancy principle.

    Attributes:
        alpha: Chosen regularization parameter.
        u: Reconstruction at ``alpha``.
        discrepancy: ||A u - f_delta||.
        target: mu * delta.
        next_alpha: Grid point above the bracket, None if alpha is the upper bound.
        next_discrepancy: Discrepancy at ``next_alpha``.
        monotone: False if the grid scan met a decreasing discrepancy.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    alpha: float
    u: np.ndarray
    discrepancy: float
    target: float
    next_alpha: float | None = None
    next_discrepancy: float | None = None
    monotone: bool = True
