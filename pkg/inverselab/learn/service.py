"""Dense networks, backpropagation, minibatch SGD and learned spectral regularization."""

import logging
from collections.abc import Callable, Sequence

import numpy as np

from inverselab.learn.schemas import (
    Activation,
    ActivationKind,
    AveragedDenoiser,
    DenseLayer,
    EmptyDatasetError,
    ForwardCache,
    LayerGradient,
    Network,
    ShapeMismatchError,
    SpectralModel,
    StaleCacheError,
    UnboundModelError,
)
from inverselab.linop.schemas import SvdFactorization
from inverselab.rng import make_rng
from inverselab.spectral.schemas import SpectralFilter, SpectralStatistics
from inverselab.spectral.service import filter_apply

logger = logging.getLogger(__name__)


# --- Networks ---


def init_network(sizes: Sequence[int], activations: Sequence[Activation], seed: int) -> Network:
    """Network with weights and biases uniform in [-1/sqrt(d), 1/sqrt(d)], d the layer input size.

    Args:
        sizes: [d0, d1, ..., dL].
        activations: One activation per layer.
        seed: Generator seed.

    Returns:
        Network: Freshly initialized network.
    """
    if len(sizes) < 2 or len(activations) != len(sizes) - 1:
        raise ShapeMismatchError(
            f"{len(sizes)} sizes need {max(len(sizes) - 1, 0)} activations, got {len(activations)}"
        )
    rng = make_rng(seed)
    layers = []
    for d_in, d_out, act in zip(sizes[:-1], sizes[1:], activations, strict=True):
        bound = 1.0 / np.sqrt(d_in)
        W = rng.uniform(-bound, bound, size=(d_out, d_in))
        b = rng.uniform(-bound, bound, size=d_out)
        layers.append(DenseLayer(W=W, b=b, activation=act))
    return Network(layers=layers)


def forward(net: Network, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network on one input (d0,) or a batch (B, d0).

    Returns:
        tuple: Output a^L and the cache of all w^l and a^l.

    Raises:
        ShapeMismatchError: If x does not match the input size.
    """
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != net.layers[0].in_dim or a.ndim not in (1, 2):
        raise ShapeMismatchError(f"input of shape {a.shape} for input size {net.layers[0].in_dim}")
    pre, post = [], [a]
    for layer in net.layers:
        w = a @ layer.W.T + layer.b
        a = layer.activation.value(w)
        pre.append(w)
        post.append(a)
    return a, ForwardCache(pre=pre, post=post, version=net.version)


def loss(net: Network, X: np.ndarray, Y: np.ndarray) -> float:
    """Mean over samples of 1/2 ||net(x) - y||^2."""
    out, _ = forward(net, X)
    diff = np.atleast_2d(out - np.asarray(Y, dtype=float))
    return 0.5 * float(np.sum(diff * diff)) / diff.shape[0]


def backprop(net: Network, cache: ForwardCache, target: np.ndarray) -> list[LayerGradient]:
    """Gradients of the mean squared-error loss for every layer.

    delta^L = act'(w^L) * (a^L - y) / B and delta^l = act'(w^l) * (W^{l+1})^T delta^{l+1};
    dW^l = delta^l (a^{l-1})^T and db^l = delta^l summed over the batch.

    Args:
        net: Network the cache was computed with.
        cache: Result of :func:`forward`.
        target: Targets matching the output.

    Returns:
        list[LayerGradient]: One gradient per layer.

    Raises:
        StaleCacheError: If parameters changed since the forward pass.
    """
    if cache.version != net.version:
        raise StaleCacheError(
            f"cache from network version {cache.version}, network is at {net.version}"
        )
    out = cache.post[-1]
    y = np.asarray(target, dtype=float)
    if y.shape != out.shape:
        raise ShapeMismatchError(f"target shape {y.shape} does not match output {out.shape}")
    batched = out.ndim == 2
    batch = out.shape[0] if batched else 1

    grads: list[LayerGradient] = [None] * len(net.layers)  # type: ignore[list-item]
    g = (out - y) / batch
    for l in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[l]
        delta = layer.activation.backward(cache.pre[l], cache.post[l + 1], g)
        a_prev = cache.post[l]
        if batched:
            grads[l] = LayerGradient(W=delta.T @ a_prev, b=delta.sum(axis=0))
        else:
            grads[l] = LayerGradient(W=np.outer(delta, a_prev), b=delta.copy())
        g = delta @ layer.W
    return grads


def full_gradient(net: Network, X: np.ndarray, Y: np.ndarray) -> list[LayerGradient]:
    """Gradient of the loss over the whole dataset."""
    _, cache = forward(net, X)
    return backprop(net, cache, Y)


def minibatch_gradient(
    net: Network, X: np.ndarray, Y: np.ndarray, indices: np.ndarray
) -> list[LayerGradient]:
    """Gradient of the loss over the samples in ``indices``."""
    return full_gradient(net, X[indices], Y[indices])


def flatten_gradient(grads: list[LayerGradient]) -> np.ndarray:
    """Concatenate W and b gradients of all layers."""
    return np.concatenate([np.concatenate([g.W.reshape(-1), g.b]) for g in grads])


def apply_gradient(net: Network, grads: list[LayerGradient], tau: float) -> None:
    """In-place step theta <- theta - tau grad."""
    for layer, g in zip(net.layers, grads, strict=True):
        layer.W = layer.W - tau * g.W
        layer.b = layer.b - tau * g.b
    net.touch()


def gradient_check(net: Network, x: np.ndarray, y: np.ndarray, step: float = 1e-5) -> float:
    """Relative distance between backprop and central finite differences.

    Returns:
        float: ||g_fd - g_bp|| / max(||g_fd|| + ||g_bp||, 1e-300).
    """
    analytic = flatten_gradient(full_gradient(net, x, y))
    numeric = []
    for layer in net.layers:
        for param in (layer.W, layer.b):
            for idx in np.ndindex(param.shape):
                saved = param[idx]
                param[idx] = saved + step
                up = loss(net, x, y)
                param[idx] = saved - step
                down = loss(net, x, y)
                param[idx] = saved
                numeric.append((up - down) / (2.0 * step))
    net.touch()
    numeric_arr = np.array(numeric)
    scale = max(float(np.linalg.norm(numeric_arr) + np.linalg.norm(analytic)), 1e-300)
    return float(np.linalg.norm(numeric_arr - analytic)) / scale


def _check_dataset(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise EmptyDatasetError("dataset is empty")
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatchError(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
    return X, Y


def _epoch_batches(rng: np.random.Generator, n: int, batch_size: int) -> list[np.ndarray]:
    """Without-replacement minibatches of one epoch, each sorted by sample index."""
    order = rng.permutation(n)
    return [np.sort(order[i : i + batch_size]) for i in range(0, n, batch_size)]


def sgd_train(
    net: Network,
    X: np.ndarray,
    Y: np.ndarray,
    batch_size: int,
    tau: float,
    epochs: int,
    seed: int,
) -> tuple[Network, np.ndarray]:
    """Minibatch SGD on the mean squared-error loss.

    Every epoch draws a fresh permutation and walks it in consecutive
    batches. With batch_size equal to the dataset size this is full-batch
    gradient descent.

    Args:
        net: Network, updated in place.
        X: Inputs, one sample per row.
        Y: Targets, one sample per row.
        batch_size: Samples per step.
        tau: Learning rate.
        epochs: Passes over the data.
        seed: Generator seed.

    Returns:
        tuple: The network and the full-data loss after every epoch.

    Raises:
        EmptyDatasetError: If there are no samples.
    """
    X, Y = _check_dataset(X, Y)
    n = X.shape[0]
    if not 1 <= batch_size <= n:
        raise ValueError(f"batch size must be in [1, {n}], got {batch_size}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    rng = make_rng(seed)
    losses = np.empty(epochs)
    for epoch in range(epochs):
        for idx in _epoch_batches(rng, n, batch_size):
            apply_gradient(net, minibatch_gradient(net, X, Y, idx), tau)
        losses[epoch] = loss(net, X, Y)
        if not np.isfinite(losses[epoch]):
            logger.warning(f"SGD: non-finite loss at epoch {epoch + 1}")
            return net, losses[: epoch + 1]
        logger.debug(f"SGD epoch {epoch + 1}: loss {losses[epoch]:.6e}")
    return net, losses


def network_function(net: Network) -> Callable[[np.ndarray], np.ndarray]:
    """The map x -> net(x)."""
    return lambda x: forward(net, x)[0]


# --- Spectral architecture ---


def spectral_forward(model: SpectralModel, f: np.ndarray) -> np.ndarray:
    """H(f; theta) = sum_n theta_n <f, v_n> u_n.

    Raises:
        UnboundModelError: If the model has no singular system.
    """
    if model.svd is None:
        raise UnboundModelError("spectral model is not bound to a singular system")
    return filter_apply(model.svd, SpectralFilter.learned(model.theta), f)


def _spectral_coordinates(
    svd: SvdFactorization, U: np.ndarray, F: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Data coefficients <f_j, v_i> and target coefficients <u_j, u_i> of A^+ A u_j."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if U.shape[0] == 0 or F.shape[0] == 0:
        raise EmptyDatasetError("no training samples")
    if U.shape[0] != F.shape[0]:
        raise ShapeMismatchError(f"{U.shape[0]} signals but {F.shape[0]} data vectors")
    if U.shape[1] != svd.cols or F.shape[1] != svd.rows:
        raise ShapeMismatchError(
            f"samples of size ({U.shape[1]}, {F.shape[1]}) for a {svd.rows}x{svd.cols} operator"
        )
    return F @ svd.left_vectors, U @ svd.right_vectors


def train_spectral(
    svd: SvdFactorization,
    U: np.ndarray,
    F: np.ndarray,
    tau: float,
    epochs: int,
    seed: int,
    batch_size: int | None = None,
) -> SpectralModel:
    """Fit theta by minibatch SGD on the mean of 1/2 ||H(f_j; theta) - A^+ A u_j||^2.

    The loss separates per index: component i only sees (theta_i c_ji - d_ji) c_ji,
    with c = <f, v_i> and d = <u, u_i>. Coefficients start at 0.

    Args:
        svd: Singular system of the forward operator.
        U: Ground-truth signals, one per row.
        F: Matching data, one per row.
        tau: Learning rate.
        epochs: Passes over the samples.
        seed: Generator seed for the batch order.
        batch_size: Samples per step, all samples by default.

    Returns:
        SpectralModel: Trained model bound to ``svd``.

    Raises:
        EmptyDatasetError: If there are no samples.
    """
    C, D = _spectral_coordinates(svd, U, F)
    n = C.shape[0]
    batch = n if batch_size is None else batch_size
    if not 1 <= batch <= n:
        raise ValueError(f"batch size must be in [1, {n}], got {batch}")
    rng = make_rng(seed)
    theta = np.zeros(svd.rank)
    for _ in range(epochs):
        for idx in _epoch_batches(rng, n, batch):
            c, d = C[idx], D[idx]
            grad = np.mean((theta * c - d) * c, axis=0)
            theta = theta - tau * grad
    logger.debug(f"spectral training finished after {epochs} epochs")
    return SpectralModel(theta=theta, svd=svd)


def spectral_statistics(
    noise_samples: np.ndarray, signal_samples: np.ndarray, svd: SvdFactorization
) -> tuple[SpectralStatistics, float]:
    """Empirical per-mode noise and prior energies and the statistical noise level.

    Delta_i = mean <eps, v_i>^2, Pi_i = mean <u, u_i>^2 and delta(mu) = sqrt(max_i Delta_i).

    Raises:
        EmptyDatasetError: If either sample set is empty.
    """
    E = np.atleast_2d(np.asarray(noise_samples, dtype=float))
    S = np.atleast_2d(np.asarray(signal_samples, dtype=float))
    if E.size == 0 or S.size == 0:
        raise EmptyDatasetError("noise and signal samples must be non-empty")
    if E.shape[1] != svd.rows or S.shape[1] != svd.cols:
        raise ShapeMismatchError(
            f"samples of size ({E.shape[1]}, {S.shape[1]}) for a {svd.rows}x{svd.cols} operator"
        )
    delta = np.mean((E @ svd.left_vectors) ** 2, axis=0)
    pi = np.mean((S @ svd.right_vectors) ** 2, axis=0)
    stats = SpectralStatistics(delta=delta, pi=pi)
    return stats, float(np.sqrt(np.max(delta, initial=0.0)))


# --- Averaged denoisers ---


def averaged_denoiser(Q: Callable[[np.ndarray], np.ndarray]) -> AveragedDenoiser:
    """D = 1/2 (I + Q)."""
    return AveragedDenoiser(Q=Q)


def lipschitz_estimate(
    fn: Callable[[np.ndarray], np.ndarray], X: np.ndarray, Y: np.ndarray
) -> float:
    """Largest ratio ||fn(x) - fn(y)|| / ||x - y|| over paired rows of X and Y."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape != Y.shape:
        raise ShapeMismatchError(f"sample sets of shapes {X.shape} and {Y.shape}")
    best = 0.0
    for x, y in zip(X, Y, strict=True):
        gap = float(np.linalg.norm(x - y))
        if gap > 0:
            best = max(best, float(np.linalg.norm(fn(x) - fn(y))) / gap)
    return best


def normalize_lipschitz(net: Network) -> Network:
    """Scale every weight matrix to spectral norm at most 1.

    With 1-Lipschitz activations the network is then 1-Lipschitz.
    """
    for layer in net.layers:
        if layer.activation.kind == ActivationKind.PRELU and layer.activation.slope > 1:
            raise ValueError("prelu slopes above 1 are not 1-Lipschitz")
        norm = float(np.linalg.norm(layer.W, 2))
        if norm > 1.0:
            layer.W = layer.W / (norm * (1.0 + 1e-12))
    net.touch()
    return net


def train_averaged_denoiser(
    clean: np.ndarray,
    noise_level: float,
    hidden: int,
    tau: float,
    epochs: int,
    seed: int,
    batch_size: int | None = None,
) -> AveragedDenoiser:
    """Train Q so that 1/2 (x + Q(x)) maps noisy samples to clean ones.

    Q is a two-layer ReLU network fitted to 2 u - (u + eps) by SGD and then
    normalized to be 1-Lipschitz.

    Args:
        clean: Clean signals, one per row.
        noise_level: Standard deviation of the Gaussian training noise.
        hidden: Hidden layer width.
        tau: Learning rate.
        epochs: Training epochs.
        seed: Seed for initialization, noise and batch order.
        batch_size: Samples per step, all by default.

    Returns:
        AveragedDenoiser: D with the trained network attached.
    """
    U = np.atleast_2d(np.asarray(clean, dtype=float))
    if U.size == 0:
        raise EmptyDatasetError("no clean samples")
    rng = make_rng(seed)
    noisy = U + noise_level * rng.standard_normal(U.shape)
    d = U.shape[1]
    net = init_network([d, hidden, d], [Activation.relu(), Activation.identity()], seed + 1)
    sgd_train(net, noisy, 2.0 * U - noisy, batch_size or U.shape[0], tau, epochs, seed + 2)
    normalize_lipschitz(net)
    return AveragedDenoiser(Q=network_function(net), network=net)
