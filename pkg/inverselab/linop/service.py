"""Operations on linear maps: application, SVD, norms and condition numbers."""

import logging

import numpy as np

from inverselab.linop.schemas import (
    DimensionMismatchError,
    LinearMap,
    SvdConvergenceError,
    SvdFactorization,
    Vector,
)
from inverselab.rng import make_rng

logger = logging.getLogger(__name__)

DEFAULT_RANK_CUTOFF = 1e-12
MAX_JACOBI_SWEEPS = 100


def _as_vector(x: Vector) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=float).reshape(-1)


# --- Construction ---


def from_matrix(matrix: np.ndarray, name: str = "matrix") -> LinearMap:
    """Wrap a dense matrix as a LinearMap.

    Args:
        matrix: 2-D real array.
        name: Label used in logs.

    Returns:
        LinearMap: Operator with ``dense_view`` set.
    """
    M = np.array(matrix, dtype=float, order="C")
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    return LinearMap(
        rows=M.shape[0],
        cols=M.shape[1],
        matvec=lambda x: M @ x,
        rmatvec=lambda y: M.T @ y,
        dense_view=M,
        name=name,
    )


def identity_map(n: int) -> LinearMap:
    """Identity on R^n."""
    return LinearMap(
        rows=n,
        cols=n,
        matvec=lambda x: x.copy(),
        rmatvec=lambda y: y.copy(),
        dense_view=np.eye(n),
        name="identity",
    )


def zero_map(rows: int, cols: int) -> LinearMap:
    """The zero operator R^cols -> R^rows."""
    return LinearMap(
        rows=rows,
        cols=cols,
        matvec=lambda x: np.zeros(rows),
        rmatvec=lambda y: np.zeros(cols),
        dense_view=np.zeros((rows, cols)),
        name="zero",
    )


def compose(outer: LinearMap, inner: LinearMap) -> LinearMap:
    """Return outer o inner.

    Raises:
        DimensionMismatchError: If inner.rows != outer.cols.
    """
    if inner.rows != outer.cols:
        raise DimensionMismatchError("compose", outer.cols, inner.rows)
    dense = None
    if outer.dense_view is not None and inner.dense_view is not None:
        dense = outer.dense_view @ inner.dense_view
    return LinearMap(
        rows=outer.rows,
        cols=inner.cols,
        matvec=lambda x: outer.matvec(inner.matvec(x)),
        rmatvec=lambda y: inner.rmatvec(outer.rmatvec(y)),
        dense_view=dense,
        name=f"{outer.name}*{inner.name}",
    )


def stack(top: LinearMap, bottom: LinearMap) -> LinearMap:
    """Vertical block operator [top; bottom] sharing one input space.

    Raises:
        DimensionMismatchError: If the input dimensions differ.
    """
    if top.cols != bottom.cols:
        raise DimensionMismatchError("stack", top.cols, bottom.cols)
    split = top.rows

    def rmatvec(y: Vector) -> Vector:
        return top.rmatvec(y[:split]) + bottom.rmatvec(y[split:])

    return LinearMap(
        rows=top.rows + bottom.rows,
        cols=top.cols,
        matvec=lambda x: np.concatenate([top.matvec(x), bottom.matvec(x)]),
        rmatvec=rmatvec,
        name=f"[{top.name};{bottom.name}]",
    )


def scale(op: LinearMap, factor: float) -> LinearMap:
    """Return factor * op."""
    dense = None if op.dense_view is None else factor * op.dense_view
    return LinearMap(
        rows=op.rows,
        cols=op.cols,
        matvec=lambda x: factor * op.matvec(x),
        rmatvec=lambda y: factor * op.rmatvec(y),
        dense_view=dense,
        name=f"{factor:g}*{op.name}",
    )


def normal_operator(op: LinearMap, alpha: float = 0.0) -> LinearMap:
    """Return the symmetric operator A^T A + alpha I."""

    def matvec(x: Vector) -> Vector:
        return op.rmatvec(op.matvec(x)) + alpha * x

    return LinearMap(
        rows=op.cols,
        cols=op.cols,
        matvec=matvec,
        rmatvec=matvec,
        name=f"normal({op.name},{alpha:g})",
    )


def dense_matrix(op: LinearMap) -> np.ndarray:
    """Assemble the matrix of ``op`` column by column.

    Args:
        op: Operator to assemble.

    Returns:
        np.ndarray: rows x cols matrix.
    """
    if op.dense_view is not None:
        return np.array(op.dense_view, dtype=float)
    M = np.empty((op.rows, op.cols))
    e = np.zeros(op.cols)
    for j in range(op.cols):
        e[j] = 1.0
        M[:, j] = op.matvec(e)
        e[j] = 0.0
    return M


# --- Application ---


def apply(op: LinearMap, x: Vector) -> Vector:
    """Apply ``op`` to ``x``.

    Args:
        op: Operator.
        x: Vector of length ``op.cols``.

    Returns:
        Vector: A x of length ``op.rows``.

    Raises:
        DimensionMismatchError: If ``len(x) != op.cols``.
    """
    v = _as_vector(x)
    if v.shape[0] != op.cols:
        raise DimensionMismatchError(f"apply({op.name})", op.cols, v.shape[0])
    return np.asarray(op.matvec(v), dtype=float)


def adjoint_apply(op: LinearMap, y: Vector) -> Vector:
    """Apply the adjoint of ``op`` to ``y``.

    Args:
        op: Operator.
        y: Vector of length ``op.rows``.

    Returns:
        Vector: A^T y of length ``op.cols``.

    Raises:
        DimensionMismatchError: If ``len(y) != op.rows``.
    """
    v = _as_vector(y)
    if v.shape[0] != op.rows:
        raise DimensionMismatchError(f"adjoint_apply({op.name})", op.rows, v.shape[0])
    return np.asarray(op.rmatvec(v), dtype=float)


def adjoint_mismatch(op: LinearMap, x: Vector, y: Vector) -> float:
    """Scaled violation of <Ax, y> = <x, A^T y>.

    Returns:
        float: |<Ax,y> - <x,A^T y>| / (1 + ||Ax|| ||y||).
    """
    Ax = apply(op, x)
    ATy = adjoint_apply(op, y)
    y = _as_vector(y)
    gap = abs(float(Ax @ y) - float(_as_vector(x) @ ATy))
    return gap / (1.0 + float(np.linalg.norm(Ax) * np.linalg.norm(y)))


# --- Singular value decomposition ---


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of a round-robin tournament over n (even) columns.

    Every unordered pair appears exactly once across the n-1 rounds and the
    pairs inside a round are disjoint, so a round can be rotated at once.
    """
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[::-1][:half])
        rounds.append((p, q))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _jacobi_columns(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Jacobi: rotate columns of M until mutually orthogonal.

    Returns:
        (W, V) with M V = W, V orthogonal and the columns of W orthogonal.
    """
    m, n = M.shape
    W = M.copy()
    if n % 2:
        W = np.hstack([W, np.zeros((m, 1))])
    n_even = W.shape[1]
    V = np.eye(n_even)
    tol = max(m, 1) * np.finfo(float).eps
    # columns this small are numerically zero and never rotated
    negligible = (np.finfo(float).eps * np.linalg.norm(M)) ** 2
    rounds = _round_robin(n_even) if n_even > 1 else []
    residual = 0.0

    for sweep in range(1, MAX_JACOBI_SWEEPS + 1):
        rotated = False
        residual = 0.0
        for p, q in rounds:
            wp, wq = W[:, p], W[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            scale_ = np.sqrt(alpha * beta)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(scale_ > 0, np.abs(gamma) / scale_, 0.0)
            residual = max(residual, float(rel.max(initial=0.0)))
            active = (rel > tol) & (alpha > negligible) & (beta > negligible)
            if not active.any():
                continue
            rotated = True
            with np.errstate(divide="ignore", invalid="ignore"):
                zeta = np.where(active, (beta - alpha) / (2.0 * gamma), 0.0)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            W[:, p], W[:, q] = c * wp - s * wq, s * wp + c * wq
            vp, vq = V[:, p], V[:, q]
            V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
        logger.debug(f"Jacobi sweep {sweep}: residual {residual:.3e}")
        if not rotated:
            return W[:, :n], V[:n, :n]
    raise SvdConvergenceError(residual, MAX_JACOBI_SWEEPS)


def svd(matrix: np.ndarray, rank_cutoff: float = DEFAULT_RANK_CUTOFF) -> SvdFactorization:
    """Singular value decomposition by one-sided Jacobi rotations.

    Singular values below ``rank_cutoff * s_max`` are dropped together with
    their vectors.

    Args:
        matrix: Dense real matrix with finite entries.
        rank_cutoff: Relative rank tolerance.

    Returns:
        SvdFactorization: Ordered singular system.

    Raises:
        ValueError: If the matrix is not 2-D or has non-finite entries.
        SvdConvergenceError: If the sweep cap is reached.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    rows, cols = A.shape
    transposed = rows < cols
    work = A.T if transposed else A

    W, V = _jacobi_columns(work)
    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, W, V = sigma[order], W[:, order], V[:, order]
    if sigma.size == 0 or sigma[0] == 0.0:
        keep = np.zeros(sigma.shape, dtype=bool)
    else:
        keep = sigma > rank_cutoff * sigma[0]
    sigma, W, V = sigma[keep], W[:, keep], V[:, keep]
    U = W / sigma

    # work = A (or A^T) satisfies work V = U diag(sigma)
    left, right = (V, U) if transposed else (U, V)
    return SvdFactorization(
        left_vectors=np.ascontiguousarray(left),
        right_vectors=np.ascontiguousarray(right),
        singular_values=sigma,
        rows=rows,
        cols=cols,
    )


# --- Diagnostics ---


def operator_norm(op: LinearMap, iters: int = 200, seed: int = 0) -> float:
    """Estimate the largest singular value by power iteration on A^T A.

    Args:
        op: Operator.
        iters: Number of power steps.
        seed: Seed of the random start vector.

    Returns:
        float: Estimate of ||A||, non-decreasing in ``iters``; 0 for the zero map.
    """
    if op.cols == 0 or op.rows == 0:
        return 0.0
    x = make_rng(seed).standard_normal(op.cols)
    x /= np.linalg.norm(x)
    estimate = float(np.linalg.norm(op.matvec(x)))
    for _ in range(iters):
        z = op.rmatvec(op.matvec(x))
        norm = float(np.linalg.norm(z))
        if norm == 0.0:
            return 0.0
        x = z / norm
        estimate = max(estimate, float(np.linalg.norm(op.matvec(x))))
    return estimate


def condition_numbers(
    matrix: np.ndarray, ratio: float = 0.0, rank_cutoff: float = DEFAULT_RANK_CUTOFF
) -> tuple[float, float]:
    """Condition numbers of A^T A and of A^T A + ratio I.

    Args:
        matrix: Nonzero dense matrix.
        ratio: Variance ratio sigma^2 / sigma_u^2 >= 0.

    Returns:
        tuple[float, float]: (cond_mle, cond_map); infinite where the smallest
        singular value is below the cutoff and the shift is zero.

    Raises:
        ValueError: For negative ratio or the zero matrix.
    """
    if ratio < 0:
        raise ValueError(f"ratio must be non-negative, got {ratio}")
    factor = svd(matrix, rank_cutoff)
    if factor.rank == 0:
        raise ValueError("condition numbers of the zero matrix are undefined")
    s_max = float(factor.singular_values[0])
    # A^T A is cols x cols: any missing singular value counts as zero
    s_min = float(factor.singular_values[-1]) if factor.rank == factor.cols else 0.0
    cond_mle = np.inf if s_min == 0.0 else s_max**2 / s_min**2
    if ratio == 0.0:
        cond_map = cond_mle
    else:
        cond_map = (s_max**2 + ratio) / (s_min**2 + ratio)
    return float(cond_mle), float(cond_map)
