"""Closed-form proximal operators, conjugates and the Haar wavelet transform."""

import math

import numpy as np

from inverselab.forward.service import grad2d
from inverselab.linop.schemas import LinearMap
from inverselab.prox.schemas import (
    OrthogonalTransform,
    ProxOp,
    ProxParameterError,
    TransformSizeError,
)

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _check_step(name: str, value: float) -> None:
    if value < 0:
        raise ProxParameterError(f"{name} must be non-negative, got {value}")


# --- Closed-form proxes ---


def shrink(v: np.ndarray, tau: float) -> np.ndarray:
    """Soft shrinkage, the prox of tau * ||.||_1.

    Entries with |v_i| <= tau map to 0, the rest move toward 0 by tau.

    Raises:
        ProxParameterError: If tau < 0.
    """
    _check_step("tau", tau)
    v = np.asarray(v, dtype=float)
    return np.where(v > tau, v - tau, np.where(v < -tau, v + tau, 0.0))


def prox_squared_l2(v: np.ndarray, tau: float, center: np.ndarray | float = 0.0) -> np.ndarray:
    """Prox of J = 1/2 ||. - f||^2: (v + tau f) / (1 + tau)."""
    _check_step("tau", tau)
    return (np.asarray(v, dtype=float) + tau * center) / (1.0 + tau)


def prox_conj_datafit(z: np.ndarray, sigma: float, f: np.ndarray) -> np.ndarray:
    """Prox of sigma H* for H = 1/2 ||. - f||^2: (z - sigma f) / (sigma + 1)."""
    _check_step("sigma", sigma)
    return (np.asarray(z, dtype=float) - sigma * np.asarray(f, dtype=float)) / (sigma + 1.0)


def project_inf_ball(z: np.ndarray, alpha: float) -> np.ndarray:
    """Componentwise clamp onto [-alpha, alpha].

    Raises:
        ProxParameterError: If alpha < 0.
    """
    _check_step("alpha", alpha)
    return np.clip(np.asarray(z, dtype=float), -alpha, alpha)


# --- Haar wavelets ---


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _haar_forward_last(x: np.ndarray) -> np.ndarray:
    """Multilevel Haar along the last axis.

    Output layout: [coarsest approximation, details coarsest .. finest].
    """
    a = x
    details = []
    while a.shape[-1] > 1:
        even, odd = a[..., 0::2], a[..., 1::2]
        details.append((even - odd) * _INV_SQRT2)
        a = (even + odd) * _INV_SQRT2
    return np.concatenate([a, *reversed(details)], axis=-1)


def _haar_inverse_last(c: np.ndarray) -> np.ndarray:
    n = c.shape[-1]
    a = c[..., :1]
    width = 1
    while width < n:
        d = c[..., width : 2 * width]
        out = np.empty((*c.shape[:-1], 2 * width))
        out[..., 0::2] = (a + d) * _INV_SQRT2
        out[..., 1::2] = (a - d) * _INV_SQRT2
        a = out
        width *= 2
    return a


def _along(fn, x: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(fn(np.moveaxis(x, axis, -1)), -1, axis)


def haar_transform(size: int | tuple[int, ...]) -> OrthogonalTransform:
    """Orthonormal multilevel Haar transform.

    A 1-D size gives the transform of vectors; a pair (m, n) gives the tensor
    product transform of m x n images, applied along rows and then columns.

    Args:
        size: Length, or image shape; every entry a power of two.

    Returns:
        OrthogonalTransform: The Haar transform.

    Raises:
        TransformSizeError: If any size is not a power of two.
    """
    shape = (size,) if isinstance(size, int) else tuple(int(s) for s in size)
    if not shape or len(shape) > 2 or not all(_is_power_of_two(s) for s in shape):
        raise TransformSizeError(f"Haar transform needs power-of-two sizes, got {shape}")

    def forward(x: np.ndarray) -> np.ndarray:
        arr = _reshape_to(x, shape)
        for axis in reversed(range(len(shape))):
            arr = _along(_haar_forward_last, arr, axis)
        return arr.reshape(np.shape(x))

    def inverse(c: np.ndarray) -> np.ndarray:
        arr = _reshape_to(c, shape)
        for axis in range(len(shape)):
            arr = _along(_haar_inverse_last, arr, axis)
        return arr.reshape(np.shape(c))

    return OrthogonalTransform(shape=shape, forward=forward, inverse=inverse, name="haar")


def identity_transform(size: int | tuple[int, ...]) -> OrthogonalTransform:
    """W = I, for which the wavelet prox reduces to plain shrinkage."""
    shape = (size,) if isinstance(size, int) else tuple(int(s) for s in size)

    def same(x: np.ndarray) -> np.ndarray:
        return _reshape_to(x, shape).reshape(np.shape(x)).copy()

    return OrthogonalTransform(shape=shape, forward=same, inverse=same, name="identity")


def _reshape_to(x: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.size != int(np.prod(shape)):
        raise TransformSizeError(f"transform of shape {shape} got {arr.size} values")
    return arr.reshape(shape)


def prox_wavelet_l1(v: np.ndarray, tau: float, W: OrthogonalTransform) -> np.ndarray:
    """Prox of tau ||W .||_1 for orthogonal W: W^T shrink(W v, tau).

    Raises:
        TransformSizeError: If v does not match the transform size.
    """
    _check_step("tau", tau)
    return W.inverse(shrink(W.forward(v), tau))


# --- ProxOp factories ---


def zero_prox() -> ProxOp:
    """G = 0; its prox is the identity."""
    return ProxOp(name="zero", evaluate=lambda v, tau: v.copy(), objective=lambda u: 0.0)


def l1_prox(weight: float) -> ProxOp:
    """G = weight * ||.||_1."""
    _check_step("weight", weight)
    return ProxOp(
        name=f"{weight:g}*l1",
        evaluate=lambda v, tau: shrink(v, tau * weight),
        objective=lambda u: weight * float(np.abs(u).sum()),
    )


def squared_l2_prox(center: np.ndarray | float = 0.0) -> ProxOp:
    """J = 1/2 ||. - center||^2."""
    return ProxOp(
        name="squared_l2",
        evaluate=lambda v, tau: prox_squared_l2(v, tau, center),
        objective=lambda u: 0.5 * float(np.sum((u - center) ** 2)),
    )


def scaled_squared_norm_prox(weight: float) -> ProxOp:
    """G = weight/2 ||.||^2, prox v / (1 + tau weight)."""
    _check_step("weight", weight)
    return ProxOp(
        name=f"{weight:g}/2*squared_norm",
        evaluate=lambda v, tau: v / (1.0 + tau * weight),
        objective=lambda u: 0.5 * weight * float(np.sum(u * u)),
    )


def wavelet_l1_prox(W: OrthogonalTransform, weight: float) -> ProxOp:
    """G = weight * ||W .||_1."""
    _check_step("weight", weight)
    return ProxOp(
        name=f"{weight:g}*l1({W.name})",
        evaluate=lambda v, tau: prox_wavelet_l1(v, tau * weight, W),
        objective=lambda u: weight * float(np.abs(W.forward(u)).sum()),
    )


def box_prox(lo: float, hi: float) -> ProxOp:
    """Indicator of the box [lo, hi]^n; its prox is the clamp."""
    if lo > hi:
        raise ProxParameterError(f"box needs lo <= hi, got [{lo}, {hi}]")

    def indicator(u: np.ndarray) -> float:
        return 0.0 if np.all((u >= lo) & (u <= hi)) else math.inf

    return ProxOp(
        name=f"box[{lo:g},{hi:g}]",
        evaluate=lambda v, tau: np.clip(v, lo, hi),
        objective=indicator,
    )


# --- Conjugates ---


def squared_norm(u: np.ndarray) -> float:
    """J(u) = 1/2 ||u||^2."""
    u = np.asarray(u, dtype=float).reshape(-1)
    return 0.5 * float(u @ u)


def squared_norm_conjugate(p: np.ndarray) -> float:
    """J* for J = 1/2 ||.||^2, which is J itself."""
    return squared_norm(p)


def datafit_conjugate(z: np.ndarray, f: np.ndarray) -> float:
    """H* for H = 1/2 ||. - f||^2: 1/2 ||z||^2 + <z, f>."""
    z = np.asarray(z, dtype=float).reshape(-1)
    return 0.5 * float(z @ z) + float(z @ np.asarray(f, dtype=float).reshape(-1))


def l1_conjugate(z: np.ndarray, alpha: float) -> float:
    """Conjugate of alpha ||.||_1: indicator of the infinity ball of radius alpha."""
    return 0.0 if float(np.max(np.abs(z), initial=0.0)) <= alpha else math.inf


def fenchel_young_gap(J, J_conj, u: np.ndarray, p: np.ndarray) -> float:
    """J(u) + J*(p) - <p, u>, non-negative for every pair."""
    inner = float(np.asarray(p, dtype=float).reshape(-1) @ np.asarray(u, dtype=float).reshape(-1))
    return J(u) + J_conj(p) - inner


# --- Total variation ---


def tv_norm(image: np.ndarray) -> float:
    """Anisotropic total variation ||grad u||_1."""
    return float(np.abs(grad2d(image)).sum())


def rof_objective(A_tilde: LinearMap, f: np.ndarray, alpha: float, image: np.ndarray) -> float:
    """1/2 ||A_tilde u - f||^2 + alpha TV(u) for an image u."""
    u = np.asarray(image, dtype=float)
    r = A_tilde.matvec(u.reshape(-1)) - np.asarray(f, dtype=float).reshape(-1)
    return 0.5 * float(r @ r) + alpha * tv_norm(u)
