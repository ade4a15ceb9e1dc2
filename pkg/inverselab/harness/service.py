"""Synthetic signals, noise and error metrics."""

import numpy as np

from inverselab.harness.schemas import NoiseMode
from inverselab.rng import make_rng

SUPPORT_THRESHOLD = 1e-3


def sparse_spikes(n: int, k: int, seed: int) -> np.ndarray:
    """Vector with exactly k nonzero entries.

    Positions are drawn without replacement; magnitudes are uniform in
    [0.5, 1.5] with random signs.

    Args:
        n: Length.
        k: Number of spikes.
        seed: Generator seed.

    Returns:
        np.ndarray: The spike train.

    Raises:
        ValueError: If k is negative or larger than n.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    rng = make_rng(seed)
    u = np.zeros(n)
    positions = rng.choice(n, size=k, replace=False)
    magnitudes = rng.uniform(0.5, 1.5, size=k)
    signs = rng.choice(np.array([-1.0, 1.0]), size=k)
    u[positions] = signs * magnitudes
    return u


def add_noise(
    f: np.ndarray, delta: float, seed: int, mode: NoiseMode = NoiseMode.GAUSSIAN_SIGMA
) -> np.ndarray:
    """f + eps for Gaussian eps.

    ``gaussian_sigma`` draws eps i.i.d. N(0, delta^2); ``scaled_to_norm``
    rescales a standard Gaussian draw so that ||eps|| = delta.

    Raises:
        ValueError: If delta is negative.
    """
    if delta < 0:
        raise ValueError(f"noise level must be non-negative, got {delta}")
    f = np.asarray(f, dtype=float)
    if delta == 0:
        return f.copy()
    eps = make_rng(seed).standard_normal(f.shape)
    if NoiseMode(mode) == NoiseMode.SCALED_TO_NORM:
        eps *= delta / np.linalg.norm(eps)
    else:
        eps *= delta
    return f + eps


def metrics(u_hat: np.ndarray, u_true: np.ndarray, peak: float = 1.0) -> tuple[float, float, float]:
    """l2 error, max error and PSNR of a reconstruction.

    Args:
        u_hat: Reconstruction.
        u_true: Reference, same shape.
        peak: Display range width used by the PSNR.

    Returns:
        tuple: (l2_err, linf_err, psnr); psnr is inf for identical inputs.

    Raises:
        ValueError: On a shape mismatch.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    u_true = np.asarray(u_true, dtype=float)
    if u_hat.shape != u_true.shape:
        raise ValueError(f"shape mismatch: {u_hat.shape} vs {u_true.shape}")
    diff = (u_hat - u_true).reshape(-1)
    l2 = float(np.linalg.norm(diff))
    linf = float(np.max(np.abs(diff), initial=0.0))
    mse = float(np.mean(diff * diff)) if diff.size else 0.0
    psnr = float("inf") if mse == 0 else float(10.0 * np.log10(peak * peak / mse))
    return l2, linf, psnr


def support_size(u: np.ndarray, threshold: float = SUPPORT_THRESHOLD) -> int:
    """Number of entries with magnitude above ``threshold``."""
    return int(np.count_nonzero(np.abs(np.asarray(u)) > threshold))
