"""Generalized inverses, spectral filters and the discrepancy principle."""

from inverselab.spectral.schemas import (
    FilterKind,
    FilterLengthError,
    MoorePenroseReport,
    MorozovResult,
    NoFeasibleAlphaError,
    PicardEntry,
    SingularSystemError,
    SpectralFilter,
    SpectralStatistics,
    StatisticsError,
)
from inverselab.spectral.service import (
    expected_filter_risk,
    filter_apply,
    map_gaussian_closed_form,
    moore_penrose_check,
    morozov_select_alpha,
    mse_optimal_filter,
    picard_diagnostic,
    pseudo_inverse_apply,
    pseudo_inverse_matrix,
    shifted_inverse,
    tikhonov_solve_cg,
    tikhonov_solve_gd,
)

__all__ = [
    "FilterKind",
    "FilterLengthError",
    "MoorePenroseReport",
    "MorozovResult",
    "NoFeasibleAlphaError",
    "PicardEntry",
    "SingularSystemError",
    "SpectralFilter",
    "SpectralStatistics",
    "StatisticsError",
    "expected_filter_risk",
    "filter_apply",
    "map_gaussian_closed_form",
    "moore_penrose_check",
    "morozov_select_alpha",
    "mse_optimal_filter",
    "picard_diagnostic",
    "pseudo_inverse_apply",
    "pseudo_inverse_matrix",
    "shifted_inverse",
    "tikhonov_solve_cg",
    "tikhonov_solve_gd",
]
