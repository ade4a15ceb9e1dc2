"""Proximal operators, Fenchel conjugates and orthogonal wavelet transforms."""

from inverselab.prox.schemas import (
    OrthogonalTransform,
    ProxOp,
    ProxParameterError,
    TransformSizeError,
)
from inverselab.prox.service import (
    box_prox,
    datafit_conjugate,
    fenchel_young_gap,
    haar_transform,
    identity_transform,
    l1_conjugate,
    l1_prox,
    project_inf_ball,
    prox_conj_datafit,
    prox_squared_l2,
    prox_wavelet_l1,
    rof_objective,
    scaled_squared_norm_prox,
    shrink,
    squared_l2_prox,
    squared_norm,
    squared_norm_conjugate,
    tv_norm,
    wavelet_l1_prox,
    zero_prox,
)

__all__ = [
    "OrthogonalTransform",
    "ProxOp",
    "ProxParameterError",
    "TransformSizeError",
    "box_prox",
    "datafit_conjugate",
    "fenchel_young_gap",
    "haar_transform",
    "identity_transform",
    "l1_conjugate",
    "l1_prox",
    "project_inf_ball",
    "prox_conj_datafit",
    "prox_squared_l2",
    "prox_wavelet_l1",
    "rof_objective",
    "scaled_squared_norm_prox",
    "shrink",
    "squared_l2_prox",
    "squared_norm",
    "squared_norm_conjugate",
    "tv_norm",
    "wavelet_l1_prox",
    "zero_prox",
]
