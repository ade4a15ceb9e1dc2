"""Discrete forward operators: integration, convolution, Radon transform and image gradient."""

import logging
import math

import numpy as np

from inverselab.forward.schemas import (
    BoundaryRule,
    DiscretizationMismatchError,
    Grid2D,
    GridError,
    Kernel2D,
    KernelError,
    Sinogram,
)
from inverselab.linop.schemas import LinearMap

logger = logging.getLogger(__name__)

DEFAULT_NODE_SPACING = 0.5


# --- Differentiation and integration ---


def integration_operator(N: int) -> LinearMap:
    """Discrete integration on N equidistant samples of [0, 1].

    The matrix is the lower-triangular all-ones matrix scaled by 1/(N-1),
    so applying it forms cumulative sums.

    Args:
        N: Number of samples, at least 2.

    Returns:
        LinearMap: N x N integration operator.

    Raises:
        GridError: If N < 2.
    """
    if N < 2:
        raise GridError(f"integration needs at least 2 samples, got {N}")
    h = 1.0 / (N - 1)

    return LinearMap(
        rows=N,
        cols=N,
        matvec=lambda x: np.cumsum(x) * h,
        rmatvec=lambda y: np.cumsum(y[::-1])[::-1] * h,
        dense_view=np.tril(np.ones((N, N))) * h,
        name=f"integration[{N}]",
    )


def backward_difference_operator(N: int) -> LinearMap:
    """Backward finite differences (N-1)(I - S), the exact inverse of integration.

    Args:
        N: Number of samples, at least 2.

    Returns:
        LinearMap: N x N differentiation operator.

    Raises:
        GridError: If N < 2.
    """
    if N < 2:
        raise GridError(f"differentiation needs at least 2 samples, got {N}")
    scale = float(N - 1)

    def matvec(x: np.ndarray) -> np.ndarray:
        return scale * np.diff(x, prepend=0.0)

    def rmatvec(y: np.ndarray) -> np.ndarray:
        return scale * (y - np.append(y[1:], 0.0))

    return LinearMap(
        rows=N,
        cols=N,
        matvec=matvec,
        rmatvec=rmatvec,
        dense_view=scale * (np.eye(N) - np.eye(N, k=-1)),
        name=f"backward_difference[{N}]",
    )


# --- Convolution ---


def gaussian_kernel(sigma: float, radius: int) -> Kernel2D:
    """Gaussian kernel sampled at integer offsets and normalized to unit sum.

    Args:
        sigma: Standard deviation in pixels.
        radius: Kernel radius r; the kernel is (2r+1) x (2r+1).

    Returns:
        Kernel2D: Normalized kernel.

    Raises:
        KernelError: If sigma <= 0 or radius < 0.
    """
    if sigma <= 0:
        raise KernelError(f"sigma must be positive, got {sigma}")
    if radius < 0:
        raise KernelError(f"radius must be non-negative, got {radius}")
    offsets = np.arange(-radius, radius + 1, dtype=float)
    sq = offsets[:, None] ** 2 + offsets[None, :] ** 2
    raw = np.exp(-sq / (2.0 * sigma**2)) / (2.0 * math.pi * sigma**2)
    return Kernel2D(radius=radius, weights=raw / raw.sum())


def _extension_indices(m: int, r: int, boundary: BoundaryRule) -> tuple[np.ndarray, np.ndarray]:
    """Source index and validity mask for positions -r .. m+r-1 of an extended axis."""
    q = np.arange(-r, m + r)
    if boundary is BoundaryRule.ZERO:
        valid = (q >= 0) & (q < m)
        return np.clip(q, 0, m - 1), valid
    if boundary is BoundaryRule.CIRCULAR:
        return np.mod(q, m), np.ones(q.shape, dtype=bool)
    # symmetric extension, edge sample repeated
    src = np.where(q < 0, -q - 1, np.where(q >= m, 2 * m - q - 1, q))
    return src, np.ones(q.shape, dtype=bool)


def _check_kernel(shape: tuple[int, int], kernel: Kernel2D) -> None:
    if kernel.radius >= min(shape):
        raise KernelError(
            f"kernel radius {kernel.radius} must be smaller than image size {min(shape)}"
        )


def convolve(
    image: np.ndarray, kernel: Kernel2D, boundary: BoundaryRule = BoundaryRule.ZERO
) -> np.ndarray:
    """Discrete convolution (g * u)(i) = sum_j g(j) u(i - j), same-size output.

    Args:
        image: m1 x m2 array.
        kernel: Convolution kernel.
        boundary: Continuation of the image outside its support.

    Returns:
        np.ndarray: m1 x m2 array.

    Raises:
        KernelError: If the kernel radius is not smaller than both image sides.
    """
    u = np.asarray(image, dtype=float)
    if u.ndim != 2:
        raise GridError(f"expected a 2-D image, got shape {u.shape}")
    _check_kernel(u.shape, kernel)
    m1, m2 = u.shape
    r = kernel.radius
    ix, vx = _extension_indices(m1, r, boundary)
    iy, vy = _extension_indices(m2, r, boundary)
    padded = u[np.ix_(ix, iy)] * (vx[:, None] & vy[None, :])

    out = np.zeros((m1, m2))
    w = kernel.weights
    for a in range(-r, r + 1):
        for b in range(-r, r + 1):
            g = w[r + a, r + b]
            if g != 0.0:
                out += g * padded[r - a : r - a + m1, r - b : r - b + m2]
    return out


def convolve_adjoint(
    image: np.ndarray, kernel: Kernel2D, boundary: BoundaryRule = BoundaryRule.ZERO
) -> np.ndarray:
    """Adjoint of :func:`convolve` for a fixed kernel and boundary rule."""
    y = np.asarray(image, dtype=float)
    if y.ndim != 2:
        raise GridError(f"expected a 2-D image, got shape {y.shape}")
    _check_kernel(y.shape, kernel)
    m1, m2 = y.shape
    r = kernel.radius
    padded = np.zeros((m1 + 2 * r, m2 + 2 * r))
    w = kernel.weights
    for a in range(-r, r + 1):
        for b in range(-r, r + 1):
            g = w[r + a, r + b]
            if g != 0.0:
                padded[r - a : r - a + m1, r - b : r - b + m2] += g * y

    ix, vx = _extension_indices(m1, r, boundary)
    iy, vy = _extension_indices(m2, r, boundary)
    padded *= vx[:, None] & vy[None, :]
    out = np.zeros((m1, m2))
    np.add.at(out, (ix[:, None], iy[None, :]), padded)
    return out


def convolution_operator(
    shape: tuple[int, int], kernel: Kernel2D, boundary: BoundaryRule = BoundaryRule.ZERO
) -> LinearMap:
    """Convolution with a fixed kernel as a LinearMap on flattened images."""
    _check_kernel(shape, kernel)
    m1, m2 = shape
    n = m1 * m2
    return LinearMap(
        rows=n,
        cols=n,
        matvec=lambda x: convolve(x.reshape(m1, m2), kernel, boundary).reshape(-1),
        rmatvec=lambda y: convolve_adjoint(y.reshape(m1, m2), kernel, boundary).reshape(-1),
        name=f"convolution[{boundary.value},r={kernel.radius}]",
    )


# --- Radon transform ---


def _ray_nodes(grid: Grid2D, node_spacing: float) -> tuple[np.ndarray, float]:
    """Quadrature nodes t_k, symmetric about 0, covering the grid from any direction."""
    dt = node_spacing * min(grid.h1, grid.h2)
    corners_x = (grid.a1, grid.a1 + grid.m1 * grid.h1)
    corners_y = (grid.a2, grid.a2 + grid.m2 * grid.h2)
    reach = max(math.hypot(x, y) for x in corners_x for y in corners_y)
    half = math.ceil(reach / dt)
    return dt * np.arange(-half, half + 1, dtype=float), dt


def ray_matrix(
    grid: Grid2D,
    angles: np.ndarray,
    offsets: np.ndarray,
    node_spacing: float = DEFAULT_NODE_SPACING,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse triplets (ray, pixel, weight) of the discretized Radon transform.

    Ray ``a * len(offsets) + o`` is the line at angle ``angles[a]`` and offset
    ``offsets[o]``, sampled at (s cos phi + t sin phi, s sin phi - t cos phi).
    Pixel ``i * m2 + j`` is cell (i, j) of the row-major image. Image values
    are interpolated bilinearly between cell centers and taken as zero outside
    the grid; each node carries the quadrature weight dt.

    Returns:
        tuple: Integer ray indices, integer pixel indices and float weights.
    """
    phi = np.asarray(angles, dtype=float)
    s = np.asarray(offsets, dtype=float)
    t, dt = _ray_nodes(grid, node_spacing)

    cos_phi = np.cos(phi)[:, None, None]
    sin_phi = np.sin(phi)[:, None, None]
    s3 = s[None, :, None]
    t3 = t[None, None, :]
    x = s3 * cos_phi + t3 * sin_phi
    y = s3 * sin_phi - t3 * cos_phi

    shape = (phi.shape[0], s.shape[0], t.shape[0])
    rays = np.broadcast_to(
        np.arange(phi.shape[0] * s.shape[0]).reshape(phi.shape[0], s.shape[0], 1), shape
    ).reshape(-1)

    fx = ((x - grid.a1) / grid.h1 - 0.5).reshape(-1)
    fy = ((y - grid.a2) / grid.h2 - 0.5).reshape(-1)
    i0 = np.floor(fx).astype(np.int64)
    j0 = np.floor(fy).astype(np.int64)
    wx = fx - i0
    wy = fy - j0

    ray_parts, pix_parts, weight_parts = [], [], []
    for di, dj, w in (
        (0, 0, (1.0 - wx) * (1.0 - wy)),
        (1, 0, wx * (1.0 - wy)),
        (0, 1, (1.0 - wx) * wy),
        (1, 1, wx * wy),
    ):
        i = i0 + di
        j = j0 + dj
        keep = (i >= 0) & (i < grid.m1) & (j >= 0) & (j < grid.m2) & (w > 0.0)
        ray_parts.append(rays[keep])
        pix_parts.append(i[keep] * grid.m2 + j[keep])
        weight_parts.append(w[keep] * dt)

    return (
        np.concatenate(ray_parts),
        np.concatenate(pix_parts),
        np.concatenate(weight_parts),
    )


def radon_operator(
    grid: Grid2D,
    angles: np.ndarray,
    offsets: np.ndarray,
    node_spacing: float = DEFAULT_NODE_SPACING,
) -> LinearMap:
    """Radon transform on ``grid`` as a LinearMap from flattened images to flattened sinograms.

    Raises:
        GridError: If there are no angles or no offsets.
    """
    n_angles, n_offsets = len(angles), len(offsets)
    if n_angles == 0 or n_offsets == 0:
        raise GridError("radon needs at least one angle and one offset")
    rays, pixels, weights = ray_matrix(grid, angles, offsets, node_spacing)
    n_rays = n_angles * n_offsets
    n_pixels = grid.m1 * grid.m2
    logger.debug(f"Radon operator: {n_rays} rays, {weights.shape[0]} nonzeros")

    def matvec(x: np.ndarray) -> np.ndarray:
        return np.bincount(rays, weights=weights * x[pixels], minlength=n_rays)

    def rmatvec(y: np.ndarray) -> np.ndarray:
        return np.bincount(pixels, weights=weights * y[rays], minlength=n_pixels)

    return LinearMap(
        rows=n_rays,
        cols=n_pixels,
        matvec=matvec,
        rmatvec=rmatvec,
        name=f"radon[{grid.m1}x{grid.m2},{n_angles}x{n_offsets}]",
    )


def radon(
    image: np.ndarray,
    grid: Grid2D,
    angles: np.ndarray,
    offsets: np.ndarray,
    node_spacing: float = DEFAULT_NODE_SPACING,
) -> Sinogram:
    """Line integrals of a cell-centered image.

    Args:
        image: m1 x m2 values on ``grid``.
        grid: Image grid, expected to be centered on the origin.
        angles: Ray angles in radians.
        offsets: Signed ray distances from the origin.
        node_spacing: Quadrature spacing along rays relative to min(h1, h2).

    Returns:
        Sinogram: len(angles) x len(offsets) values.

    Raises:
        GridError: If the image does not match the grid or a list is empty.
    """
    u = np.asarray(image, dtype=float)
    if u.shape != grid.shape:
        raise GridError(f"image shape {u.shape} does not match grid {grid.shape}")
    phi = np.asarray(angles, dtype=float).reshape(-1)
    s = np.asarray(offsets, dtype=float).reshape(-1)
    op = radon_operator(grid, phi, s, node_spacing)
    values = op.matvec(u.reshape(-1)).reshape(phi.shape[0], s.shape[0])
    return Sinogram(angles=phi, offsets=s, values=values, grid=grid, node_spacing=node_spacing)


def radon_adjoint(
    sino: Sinogram, grid: Grid2D, node_spacing: float | None = None
) -> np.ndarray:
    """Backprojection: the exact adjoint of :func:`radon`.

    Args:
        sino: Sinogram computed on ``grid``.
        grid: Target image grid.
        node_spacing: Expected quadrature spacing; defaults to the sinogram's.

    Returns:
        np.ndarray: m1 x m2 image.

    Raises:
        DiscretizationMismatchError: If the sinogram was built on another discretization.
    """
    if sino.grid != grid:
        raise DiscretizationMismatchError(
            f"sinogram grid {sino.grid!r} does not match requested grid {grid!r}"
        )
    if node_spacing is not None and node_spacing != sino.node_spacing:
        raise DiscretizationMismatchError(
            f"sinogram node spacing {sino.node_spacing} differs from {node_spacing}"
        )
    op = radon_operator(grid, sino.angles, sino.offsets, sino.node_spacing)
    return op.rmatvec(sino.values.reshape(-1)).reshape(grid.shape)


# --- Image gradient ---


def grad2d(image: np.ndarray) -> np.ndarray:
    """Forward differences with zero last row (component 0) and zero last column (component 1).

    Args:
        image: m x n array.

    Returns:
        np.ndarray: 2 x m x n array.
    """
    u = np.asarray(image, dtype=float)
    if u.ndim != 2:
        raise GridError(f"expected a 2-D image, got shape {u.shape}")
    g = np.zeros((2, *u.shape))
    g[0, :-1, :] = u[1:, :] - u[:-1, :]
    g[1, :, :-1] = u[:, 1:] - u[:, :-1]
    return g


def div2d(field: np.ndarray) -> np.ndarray:
    """Discrete divergence, the negative adjoint of :func:`grad2d`.

    Args:
        field: 2 x m x n array.

    Returns:
        np.ndarray: m x n array.
    """
    p = np.asarray(field, dtype=float)
    if p.ndim != 3 or p.shape[0] != 2:
        raise GridError(f"expected a 2 x m x n field, got shape {p.shape}")
    q0 = p[0].copy()
    q0[-1, :] = 0.0
    q1 = p[1].copy()
    q1[:, -1] = 0.0
    d = q0 + q1
    d[1:, :] -= q0[:-1, :]
    d[:, 1:] -= q1[:, :-1]
    return d


def gradient_operator(m: int, n: int) -> LinearMap:
    """grad2d as a LinearMap from R^(m n) to R^(2 m n)."""
    if m < 1 or n < 1:
        raise GridError(f"image size must be positive, got {m}x{n}")
    return LinearMap(
        rows=2 * m * n,
        cols=m * n,
        matvec=lambda x: grad2d(x.reshape(m, n)).reshape(-1),
        rmatvec=lambda y: -div2d(y.reshape(2, m, n)).reshape(-1),
        name=f"gradient[{m}x{n}]",
    )
