"""Types for dense networks and learned spectral filters."""

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from inverselab.linop.schemas import SvdFactorization


class ShapeMismatchError(ValueError):
    """Raised when arrays do not fit the network or the singular system."""


class StaleCacheError(RuntimeError):
    """Raised when backprop is given a cache from before a parameter update."""


class UnboundModelError(RuntimeError):
    """Raised when a spectral model is used without a singular system."""


class EmptyDatasetError(ValueError):
    """Raised when training or statistics get no samples."""


class ModelFormatError(ValueError):
    """Raised when a saved network cannot be parsed.

    Attributes:
        line: 1-based line number of the problem.
    """

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ActivationKind(str, Enum):
    """Supported activation functions."""

    RELU = "relu"
    PRELU = "prelu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"
    SOFTMAX = "softmax"


class Activation(BaseModel):
    """Activation function with its derivative.

    ``slope`` is the negative-side slope of ``prelu`` and ignored otherwise.
    Softmax acts on the last axis and may only close a network.
    """

    model_config = ConfigDict(frozen=True)

    kind: ActivationKind
    slope: float = Field(0.25, ge=0)

    @classmethod
    def relu(cls) -> "Activation":
        return cls(kind=ActivationKind.RELU)

    @classmethod
    def prelu(cls, slope: float = 0.25) -> "Activation":
        return cls(kind=ActivationKind.PRELU, slope=slope)

    @classmethod
    def sigmoid(cls) -> "Activation":
        return cls(kind=ActivationKind.SIGMOID)

    @classmethod
    def identity(cls) -> "Activation":
        return cls(kind=ActivationKind.IDENTITY)

    @classmethod
    def softmax(cls) -> "Activation":
        return cls(kind=ActivationKind.SOFTMAX)

    @property
    def label(self) -> str:
        """Text form used by the model file format, e.g. ``prelu:0.25``."""
        if self.kind == ActivationKind.PRELU:
            return f"prelu:{self.slope!r}"
        return self.kind.value

    @classmethod
    def from_label(cls, label: str) -> "Activation":
        """Inverse of :attr:`label`."""
        name, _, arg = label.partition(":")
        kind = ActivationKind(name)
        if kind == ActivationKind.PRELU:
            return cls(kind=kind, slope=float(arg) if arg else 0.25)
        return cls(kind=kind)

    def value(self, z: np.ndarray) -> np.ndarray:
        """a = act(z)."""
        if self.kind == ActivationKind.RELU:
            return np.maximum(z, 0.0)
        if self.kind == ActivationKind.PRELU:
            return np.where(z > 0, z, self.slope * z)
        if self.kind == ActivationKind.SIGMOID:
            e = np.exp(-np.abs(z))
            return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        if self.kind == ActivationKind.IDENTITY:
            return np.array(z, dtype=float)
        shifted = z - np.max(z, axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / np.sum(e, axis=-1, keepdims=True)

    def backward(self, z: np.ndarray, a: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Pull ``grad`` (w.r.t. a) back to z. ReLU'(0) is 0."""
        if self.kind == ActivationKind.RELU:
            return grad * (z > 0)
        if self.kind == ActivationKind.PRELU:
            return grad * np.where(z > 0, 1.0, self.slope)
        if self.kind == ActivationKind.SIGMOID:
            return grad * a * (1.0 - a)
        if self.kind == ActivationKind.IDENTITY:
            return np.array(grad, dtype=float)
        return a * (grad - np.sum(grad * a, axis=-1, keepdims=True))


@dataclass
class DenseLayer:
    """Fully connected layer x -> act(W x + b)."""

    W: np.ndarray
    b: np.ndarray
    activation: Activation

    @property
    def in_dim(self) -> int:
        return int(self.W.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.W.shape[0])


@dataclass
class LayerGradient:
    """Loss gradient with respect to one layer's parameters."""

    W: np.ndarray
    b: np.ndarray


@dataclass
class ForwardCache:
    """Intermediates of a forward pass.

    Attributes:
        pre: w^l = W^l a^{l-1} + b^l for l = 1..L.
        post: a^0 = x and a^l = act(w^l) for l = 1..L.
        version: Network version the pass was computed with.
    """

    pre: list[np.ndarray]
    post: list[np.ndarray]
    version: int


@dataclass
class Network:
    """Ordered dense layers.

    ``version`` increases with every parameter update, which invalidates
    earlier forward caches.
    """

    layers: list[DenseLayer]
    version: int = 0

    def __post_init__(self) -> None:
        if not self.layers:
            raise ShapeMismatchError("a network needs at least one layer")
        for l, (prev, nxt) in enumerate(zip(self.layers, self.layers[1:], strict=False), start=1):
            if nxt.in_dim != prev.out_dim:
                raise ShapeMismatchError(
                    f"layer {l + 1} expects {nxt.in_dim} inputs, layer {l} gives {prev.out_dim}"
                )
        for l, layer in enumerate(self.layers, start=1):
            if layer.b.shape != (layer.out_dim,):
                raise ShapeMismatchError(f"layer {l} bias must have length {layer.out_dim}")
            if layer.activation.kind == ActivationKind.SOFTMAX and l != len(self.layers):
                raise ShapeMismatchError("softmax is only allowed on the output layer")

    @property
    def sizes(self) -> list[int]:
        """[d0, d1, ..., dL]."""
        return [self.layers[0].in_dim] + [layer.out_dim for layer in self.layers]

    @property
    def parameter_count(self) -> int:
        return sum(layer.W.size + layer.b.size for layer in self.layers)

    def touch(self) -> None:
        """Mark parameters as changed."""
        self.version += 1


@dataclass
class SpectralModel:
    """Spectral architecture H(f; theta) = sum_n theta_n <f, v_n> u_n.

    Attributes:
        theta: Per-index coefficients.
        svd: Bound singular system, or None before binding.
    """

    theta: np.ndarray
    svd: SvdFactorization | None = None

    def __post_init__(self) -> None:
        self.theta = np.array(self.theta, dtype=float)
        if self.svd is not None and self.theta.shape != (self.svd.rank,):
            raise ShapeMismatchError(
                f"{self.theta.shape[0]} coefficients for a rank-{self.svd.rank} singular system"
            )
        if not np.all(np.isfinite(self.theta)):
            raise ShapeMismatchError("spectral coefficients must be finite")


@dataclass
class AveragedDenoiser:
    """D = 1/2 (I + Q).

    Attributes:
        Q: The operator being averaged.
        network: Network realizing Q, when there is one.
    """

    Q: Callable[[np.ndarray], np.ndarray]
    network: Network | None = field(default=None)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return 0.5 * (v + self.Q(v))

    def lipschitz(self, X: np.ndarray, Y: np.ndarray) -> float:
        """Empirical Lipschitz constant of Q over the paired rows of X and Y.

        An estimate from below; it does not certify that Q is non-expansive.
        """
        from inverselab.learn.service import lipschitz_estimate

        return lipschitz_estimate(self.Q, X, Y)
