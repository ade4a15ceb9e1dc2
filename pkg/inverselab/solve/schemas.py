"""Schemas for iterative solvers."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, model_validator

from inverselab.linop.schemas import LinearMap
from inverselab.linop.service import operator_norm


class StepConditionError(ValueError):
    """Raised when primal-dual step sizes violate tau * sigma * ||A||^2 < 1."""


class NotPositiveDefiniteError(RuntimeError):
    """Raised when conjugate gradients meets a direction with <p, Cp> <= 0."""


class SolverStatus(str, Enum):
    """How an iteration ended."""

    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


class SolverConfig(BaseModel):
    """Step sizes and budget shared by the first-order solvers.

    Attributes:
        tau: Primal step.
        sigma: Dual step (Chambolle-Pock).
        theta: Overrelaxation in [0, 1] (Chambolle-Pock).
        mu: Augmented-Lagrangian weight (ADMM).
        max_iter: Iteration budget.
        tol: Stop once ||u^{k+1} - u^k|| <= tol (1 + ||u^k||).
        nu: Known strong-convexity constant, used by rate checks only.
        operator_norm: ||A|| when known; enables the step condition check.
        objective_every: Objective logging cadence; 0 disables it.
    """

    tau: float = Field(1.0, gt=0)
    sigma: float = Field(1.0, gt=0)
    theta: float = Field(1.0, ge=0, le=1)
    mu: float = Field(1.0, gt=0)
    max_iter: int = Field(500, ge=0)
    tol: float = Field(0.0, ge=0)
    nu: float | None = Field(None, ge=0)
    operator_norm: float | None = Field(None, ge=0)
    objective_every: int = Field(1, ge=0)

    @model_validator(mode="after")
    def _check_step_condition(self) -> "SolverConfig":
        if self.operator_norm is not None and self.tau * self.sigma * self.operator_norm**2 >= 1:
            raise ValueError(
                f"tau*sigma*||A||^2 = {self.tau * self.sigma * self.operator_norm**2:.6g} "
                "must be below 1"
            )
        return self

    @classmethod
    def for_operator(cls, op: LinearMap, **overrides) -> "SolverConfig":
        """Primal-dual configuration with tau = sigma = 0.99 / ||A||.

        Args:
            op: Coupling operator A.
            **overrides: Any other field; explicit tau or sigma win.

        Returns:
            SolverConfig: Configuration satisfying the step condition.
        """
        norm = overrides.pop("operator_norm", None)
        if norm is None:
            norm = operator_norm(op)
        step = 0.99 / norm if norm > 0 else 1.0
        overrides.setdefault("tau", step)
        overrides.setdefault("sigma", step)
        return cls(operator_norm=norm, **overrides)


class IterationRecord(BaseModel):
    """One iteration of a solver.

    Attributes:
        k: Iteration index, starting at 1.
        objective: Objective at the new iterate, when evaluated.
        residual: Solver-specific residual (CG residual, primal feasibility, ...).
        step: ||u^{k} - u^{k-1}||.
    """

    k: int = Field(..., ge=1)
    objective: float | None = None
    residual: float | None = None
    step: float


class IterationLog(BaseModel):
    """Trace of a solver run."""

    solver: str
    records: list[IterationRecord] = Field(default_factory=list)
    status: SolverStatus = SolverStatus.MAX_ITER

    def append(self, record: IterationRecord) -> None:
        """Add a record; indices must increase."""
        if self.records and record.k <= self.records[-1].k:
            raise ValueError(f"iteration {record.k} does not follow {self.records[-1].k}")
        self.records.append(record)

    @property
    def iterations(self) -> int:
        """Number of completed iterations."""
        return len(self.records)

    @property
    def converged(self) -> bool:
        """Whether the stopping rule fired."""
        return self.status == SolverStatus.CONVERGED

    def objectives(self) -> np.ndarray:
        """Objective values, NaN where not evaluated."""
        return np.array(
            [np.nan if r.objective is None else r.objective for r in self.records], dtype=float
        )

    def residuals(self) -> np.ndarray:
        """Residual values, NaN where not recorded."""
        return np.array(
            [np.nan if r.residual is None else r.residual for r in self.records], dtype=float
        )

    def steps(self) -> np.ndarray:
        """Step norms."""
        return np.array([r.step for r in self.records], dtype=float)
