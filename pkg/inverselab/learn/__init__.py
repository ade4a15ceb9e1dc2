"""Dense networks, backpropagation and learned regularizers."""

from inverselab.learn.schemas import (
    Activation,
    ActivationKind,
    AveragedDenoiser,
    DenseLayer,
    EmptyDatasetError,
    ForwardCache,
    LayerGradient,
    ModelFormatError,
    Network,
    ShapeMismatchError,
    SpectralModel,
    StaleCacheError,
    UnboundModelError,
)
from inverselab.learn.serializers import (
    deserialize_network,
    load_network,
    save_network,
    serialize_network,
)
from inverselab.learn.service import (
    apply_gradient,
    averaged_denoiser,
    backprop,
    flatten_gradient,
    forward,
    full_gradient,
    gradient_check,
    init_network,
    lipschitz_estimate,
    loss,
    minibatch_gradient,
    network_function,
    normalize_lipschitz,
    sgd_train,
    spectral_forward,
    spectral_statistics,
    train_averaged_denoiser,
    train_spectral,
)

__all__ = [
    "Activation",
    "ActivationKind",
    "AveragedDenoiser",
    "DenseLayer",
    "EmptyDatasetError",
    "ForwardCache",
    "LayerGradient",
    "ModelFormatError",
    "Network",
    "ShapeMismatchError",
    "SpectralModel",
    "StaleCacheError",
    "UnboundModelError",
    "apply_gradient",
    "averaged_denoiser",
    "backprop",
    "deserialize_network",
    "flatten_gradient",
    "forward",
    "full_gradient",
    "gradient_check",
    "init_network",
    "lipschitz_estimate",
    "load_network",
    "loss",
    "minibatch_gradient",
    "network_function",
    "normalize_lipschitz",
    "save_network",
    "serialize_network",
    "sgd_train",
    "spectral_forward",
    "spectral_statistics",
    "train_averaged_denoiser",
    "train_spectral",
]
