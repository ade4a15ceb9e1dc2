"""Types for proximal operators and orthogonal transforms."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np


class ProxParameterError(ValueError):
    """Raised for a negative step size or threshold."""


class TransformSizeError(ValueError):
    """Raised when a transform is built for, or applied to, an unsupported size."""


@dataclass(frozen=True)
class ProxOp:
    """Proximal map of a convex functional J.

    Attributes:
        name: Descriptor of the functional, e.g. ``"0.1*l1"``.
        evaluate: (v, tau) -> argmin_z 1/2 ||z - v||^2 + tau J(z).
        objective: Optional J itself, used for objective traces.
    """

    name: str
    evaluate: Callable[[np.ndarray, float], np.ndarray]
    objective: Callable[[np.ndarray], float] | None = None

    def __call__(self, v: np.ndarray, tau: float) -> np.ndarray:
        if tau < 0:
            raise ProxParameterError(f"prox step must be non-negative, got {tau}")
        return self.evaluate(np.asarray(v, dtype=float), tau)


@dataclass(frozen=True)
class OrthogonalTransform:
    """Linear orthogonal map W with its inverse W^T.

    Both maps accept any array holding ``prod(shape)`` values and return an
    array of the same shape as their input.

    Attributes:
        shape: Signal shape, one entry per transformed axis.
        forward: x -> W x.
        inverse: c -> W^T c.
        name: Short label.
    """

    shape: tuple[int, ...]
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    name: str = "transform"

    @property
    def size(self) -> int:
        """Number of coefficients."""
        return int(np.prod(self.shape))
