"""Additive-ellipse head phantom.

The table loosely follows the Shepp-Logan layout with its own coefficients.
Intensities are dyadic so sums of overlapping ellipses are exact, and the
table is mirror symmetric in x.
"""

from typing import NamedTuple

import numpy as np

from inverselab.harness.schemas import ImageBuffer

MIN_PHANTOM_SIZE = 8


class Ellipse(NamedTuple):
    """Ellipse on [-1, 1]^2.

    Attributes:
        x0: Center abscissa.
        y0: Center ordinate.
        a: Semi-axis along the rotated x direction.
        b: Semi-axis along the rotated y direction.
        angle: Counter-clockwise rotation in degrees.
        value: Intensity added inside.
    """

    x0: float
    y0: float
    a: float
    b: float
    angle: float
    value: float


ELLIPSES: tuple[Ellipse, ...] = (
    Ellipse(0.0, 0.0, 0.70, 0.90, 0.0, 1.0),
    Ellipse(0.0, -0.02, 0.66, 0.86, 0.0, -0.75),
    Ellipse(0.22, 0.0, 0.12, 0.32, -18.0, -0.125),
    Ellipse(-0.22, 0.0, 0.12, 0.32, 18.0, -0.125),
    Ellipse(0.0, 0.35, 0.21, 0.25, 0.0, 0.25),
    Ellipse(0.0, 0.1, 0.05, 0.05, 0.0, 0.125),
    Ellipse(0.0, -0.1, 0.05, 0.05, 0.0, 0.125),
    Ellipse(0.08, -0.6, 0.05, 0.025, 0.0, 0.125),
    Ellipse(-0.08, -0.6, 0.05, 0.025, 0.0, 0.125),
    Ellipse(0.0, -0.6, 0.025, 0.025, 0.0, 0.25),
)


def pixel_centers(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of the n x n cell centers of [-1, 1]^2.

    Returns:
        tuple: (x, y) arrays of shape (n, n); row 0 is the top (largest y).
    """
    h = 2.0 / n
    t = (np.arange(n) - (n - 1) / 2.0) * h
    x, y = np.meshgrid(t, -t)
    return x, y


def ellipse_mask(n: int, ellipse: Ellipse) -> np.ndarray:
    """Boolean mask of the pixel centers inside ``ellipse``."""
    x, y = pixel_centers(n)
    phi = np.deg2rad(ellipse.angle)
    c, s = np.cos(phi), np.sin(phi)
    dx, dy = x - ellipse.x0, y - ellipse.y0
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (u / ellipse.a) ** 2 + (v / ellipse.b) ** 2 <= 1.0


def phantom_ellipses(n: int, ellipses: tuple[Ellipse, ...] = ELLIPSES) -> ImageBuffer:
    """Piecewise-constant phantom on an n x n grid.

    Args:
        n: Pixels per side, at least 8.
        ellipses: Ellipse table, the built-in one by default.

    Returns:
        ImageBuffer: Values clipped to [0, 1] with display range [0, 1].

    Raises:
        ValueError: If n < 8.
    """
    if n < MIN_PHANTOM_SIZE:
        raise ValueError(f"phantom size must be at least {MIN_PHANTOM_SIZE}, got {n}")
    image = np.zeros((n, n))
    for ellipse in ellipses:
        image[ellipse_mask(n, ellipse)] += ellipse.value
    return ImageBuffer(values=np.clip(image, 0.0, 1.0), lo=0.0, hi=1.0)
