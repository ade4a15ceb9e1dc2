"""Generalized inverses, spectral filters and parameter choice."""

import logging
import math
from collections.abc import Callable

import numpy as np

from inverselab.linop.schemas import DimensionMismatchError, LinearMap, SvdFactorization
from inverselab.linop.service import normal_operator, operator_norm
from inverselab.solve.schemas import IterationLog, SolverConfig
from inverselab.solve.service import conjugate_gradient, gradient_descent
from inverselab.spectral.schemas import (
    MoorePenroseReport,
    MorozovResult,
    NoFeasibleAlphaError,
    PicardEntry,
    SingularSystemError,
    SpectralFilter,
    SpectralStatistics,
    StatisticsError,
)

logger = logging.getLogger(__name__)

MOROZOV_ALPHA_MIN = 1e-8
MOROZOV_ALPHA_MAX = 1e4
MOROZOV_POINTS_PER_DECADE = 13
MOROZOV_BISECTION_STEPS = 30


def _data_coefficients(svd: SvdFactorization, f: np.ndarray) -> np.ndarray:
    """<f, v_i> for every stored left singular vector."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != svd.rows:
        raise DimensionMismatchError("data vector", svd.rows, f.shape[0])
    return svd.left_vectors.T @ f


# --- Generalized inverse ---


def filter_apply(svd: SvdFactorization, filt: SpectralFilter, f: np.ndarray) -> np.ndarray:
    """Filtered reconstruction sum_i r(sigma_i) <f, v_i> u_i.

    Args:
        svd: Singular system of the forward operator.
        filt: Spectral filter.
        f: Data vector.

    Returns:
        np.ndarray: Reconstruction in the solution space.

    Raises:
        FilterLengthError: For a learned filter of the wrong length.
    """
    theta = filt.coefficients(svd.singular_values)
    return svd.right_vectors @ (theta * _data_coefficients(svd, f))


def pseudo_inverse_apply(svd: SvdFactorization, f: np.ndarray) -> np.ndarray:
    """Minimal-norm least-squares solution A^+ f."""
    return filter_apply(svd, SpectralFilter.pseudo_inverse(), f)


def pseudo_inverse_matrix(svd: SvdFactorization) -> np.ndarray:
    """Dense A^+ = sum_i sigma_i^{-1} u_i v_i^T."""
    return (svd.right_vectors / svd.singular_values) @ svd.left_vectors.T


def moore_penrose_check(A: np.ndarray, Adag: np.ndarray, tol: float = 1e-9) -> MoorePenroseReport:
    """Evaluate the four Moore-Penrose identities.

    Args:
        A: m x n matrix.
        Adag: Candidate n x m pseudo-inverse.
        tol: Pass threshold on the maximum deviation.

    Returns:
        MoorePenroseReport: Max absolute deviation per identity.

    Raises:
        DimensionMismatchError: If Adag is not n x m.
    """
    A = np.asarray(A, dtype=float)
    Adag = np.asarray(Adag, dtype=float)
    if Adag.shape[0] != A.shape[1]:
        raise DimensionMismatchError("pseudo-inverse rows", A.shape[1], Adag.shape[0])
    if Adag.shape[1] != A.shape[0]:
        raise DimensionMismatchError("pseudo-inverse columns", A.shape[0], Adag.shape[1])
    P = Adag @ A
    Q = A @ Adag
    return MoorePenroseReport(
        a_adag_a=float(np.max(np.abs(A @ P - A), initial=0.0)),
        adag_a_adag=float(np.max(np.abs(P @ Adag - Adag), initial=0.0)),
        adag_a_symmetry=float(np.max(np.abs(P - P.T), initial=0.0)),
        a_adag_symmetry=float(np.max(np.abs(Q - Q.T), initial=0.0)),
        tol=tol,
    )


def picard_diagnostic(svd: SvdFactorization, f: np.ndarray) -> list[PicardEntry]:
    """Picard table: sigma_i, |<f, v_i>|, their ratio and partial sums of ratio^2."""
    coeff = np.abs(_data_coefficients(svd, f))
    ratio = coeff / svd.singular_values
    partial = np.cumsum(ratio**2)
    return [
        PicardEntry(
            index=i,
            sigma=float(svd.singular_values[i]),
            coefficient=float(coeff[i]),
            ratio=float(ratio[i]),
            partial_sum=float(partial[i]),
        )
        for i in range(svd.rank)
    ]


# --- Tikhonov ---


def tikhonov_solve_cg(
    A: LinearMap,
    f: np.ndarray,
    alpha: float,
    cfg: SolverConfig | None = None,
    u0: np.ndarray | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Solve (A^T A + alpha I) u = A^T f by conjugate gradients.

    Without ``cfg`` the residual tolerance is 1e-10 and the budget 10 n;
    otherwise ``cfg.tol`` and ``cfg.max_iter`` apply.

    Raises:
        ValueError: If alpha <= 0.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != A.rows:
        raise DimensionMismatchError("tikhonov data", A.rows, f.shape[0])
    tol = 1e-10 if cfg is None else cfg.tol
    max_iter = None if cfg is None else cfg.max_iter
    u, log = conjugate_gradient(
        normal_operator(A, alpha), A.rmatvec(f), u0=u0, max_iter=max_iter, tol=tol
    )
    log.solver = "tikhonov_cg"
    return u, log


def tikhonov_solve_gd(
    A: LinearMap,
    f: np.ndarray,
    alpha: float,
    tau: float | None = None,
    max_iter: int = 500,
    tol: float = 0.0,
    u0: np.ndarray | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Gradient descent on 1/2 ||A u - f||^2 + alpha/2 ||u||^2.

    With alpha = 0 this is Landweber iteration. The step defaults to
    1 / (||A||^2 + alpha).
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    f = np.asarray(f, dtype=float).reshape(-1)
    if tau is None:
        tau = 1.0 / (operator_norm(A) ** 2 + alpha)

    def grad(u: np.ndarray) -> np.ndarray:
        return A.rmatvec(A.matvec(u) - f) + alpha * u

    def objective(u: np.ndarray) -> float:
        r = A.matvec(u) - f
        return 0.5 * float(r @ r) + 0.5 * alpha * float(u @ u)

    start = np.zeros(A.cols) if u0 is None else u0
    u, log = gradient_descent(grad, start, tau, max_iter, objective=objective, tol=tol)
    log.solver = "tikhonov_gd"
    return u, log


def shifted_inverse(A: np.ndarray, f: np.ndarray, alpha: float) -> np.ndarray:
    """Eigenvalue-shift regularization (A + alpha I)^{-1} f for square A.

    Raises:
        SingularSystemError: If A + alpha I is singular.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"shifted inverse needs a square matrix, got shape {A.shape}")
    return _solve_checked(A + alpha * np.eye(A.shape[0]), np.asarray(f, dtype=float))


def _solve_checked(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if np.linalg.cond(M) > 1.0 / np.finfo(float).eps:
        raise SingularSystemError("system matrix is numerically singular")
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def map_gaussian_closed_form(
    A: np.ndarray, f: np.ndarray, ratio: float, mu_prior: np.ndarray | None = None
) -> np.ndarray:
    """MAP estimate under a Gaussian prior and Gaussian noise.

    Computes (A^T A + ratio I)^{-1} (A^T f + ratio mu_prior); ratio = 0 is the
    maximum likelihood estimate.

    Args:
        A: Dense forward matrix.
        f: Data.
        ratio: Noise-to-prior variance ratio, non-negative.
        mu_prior: Prior mean, zero by default.

    Returns:
        np.ndarray: The estimate.

    Raises:
        SingularSystemError: If the system matrix is singular.
    """
    if ratio < 0:
        raise ValueError(f"ratio must be non-negative, got {ratio}")
    A = np.asarray(A, dtype=float)
    f = np.asarray(f, dtype=float).reshape(-1)
    n = A.shape[1]
    mean = np.zeros(n) if mu_prior is None else np.asarray(mu_prior, dtype=float).reshape(-1)
    M = A.T @ A + ratio * np.eye(n)
    return _solve_checked(M, A.T @ f + ratio * mean)


# --- Data-driven filters ---


def _check_statistics(svd: SvdFactorization, stats: SpectralStatistics) -> None:
    if stats.delta.shape[0] != svd.rank:
        raise StatisticsError(
            f"statistics have {stats.delta.shape[0]} modes, singular system has {svd.rank}"
        )


def mse_optimal_filter(svd: SvdFactorization, stats: SpectralStatistics) -> SpectralFilter:
    """Per-mode MSE-optimal coefficients theta_i = sigma_i / (sigma_i^2 + Delta_i / Pi_i).

    Modes with Pi_i = 0 carry no signal and get theta_i = 0.

    Raises:
        StatisticsError: If the statistics do not match the rank.
    """
    _check_statistics(svd, stats)
    s = svd.singular_values
    has_signal = stats.pi > 0
    noise_ratio = np.divide(stats.delta, stats.pi, out=np.zeros_like(s), where=has_signal)
    theta = np.where(has_signal, s / (s * s + noise_ratio), 0.0)
    return SpectralFilter.learned(theta)


def expected_filter_risk(
    svd: SvdFactorization, filt: SpectralFilter, stats: SpectralStatistics
) -> float:
    """Expected squared error sum_i (theta_i sigma_i - 1)^2 Pi_i + theta_i^2 Delta_i."""
    _check_statistics(svd, stats)
    theta = filt.coefficients(svd.singular_values)
    terms = (theta * svd.singular_values - 1.0) ** 2 * stats.pi + theta**2 * stats.delta
    return math.fsum(terms)


# --- Parameter choice ---


def morozov_select_alpha(
    solve: Callable[[float], np.ndarray],
    A: LinearMap,
    f_delta: np.ndarray,
    delta: float,
    mu: float = 1.0,
    alpha_min: float = MOROZOV_ALPHA_MIN,
    alpha_max: float = MOROZOV_ALPHA_MAX,
    points_per_decade: int = MOROZOV_POINTS_PER_DECADE,
    bisection_steps: int = MOROZOV_BISECTION_STEPS,
) -> MorozovResult:
    """Discrepancy principle: largest alpha with ||A u_alpha - f_delta|| <= mu delta.

    The geometric grid is scanned from its top; the first feasible point and
    its infeasible upper neighbour are refined by bisection in log alpha.

    Args:
        solve: Map alpha -> u_alpha.
        A: Forward operator.
        f_delta: Noisy data.
        delta: Noise level, positive.
        mu: Safety factor, at least 1.
        alpha_min: Smallest alpha searched.
        alpha_max: Largest alpha searched.
        points_per_decade: Grid density.
        bisection_steps: Refinement steps.

    Returns:
        MorozovResult: Chosen alpha with its reconstruction and diagnostics.

    Raises:
        NoFeasibleAlphaError: If even alpha_min violates the bound.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if mu < 1:
        raise ValueError(f"mu must be at least 1, got {mu}")
    if not 0 < alpha_min < alpha_max:
        raise ValueError(f"need 0 < alpha_min < alpha_max, got [{alpha_min}, {alpha_max}]")
    f_delta = np.asarray(f_delta, dtype=float).reshape(-1)
    target = mu * delta
    decades = math.log10(alpha_max) - math.log10(alpha_min)
    n_points = int(round(decades * points_per_decade)) + 1
    grid = np.logspace(math.log10(alpha_min), math.log10(alpha_max), n_points)

    def discrepancy(alpha: float) -> tuple[np.ndarray, float]:
        u = solve(alpha)
        return u, float(np.linalg.norm(A.matvec(u) - f_delta))

    monotone = True
    above: tuple[float, float] | None = None
    previous = math.inf
    for alpha in grid[::-1]:
        u, disc = discrepancy(float(alpha))
        if disc > previous * (1.0 + 1e-10) + 1e-14:
            monotone = False
            logger.warning(
                f"discrepancy not monotone: {disc:.6g} at alpha={alpha:.6g} exceeds {previous:.6g}"
            )
        previous = disc
        if disc <= target:
            break
        above = (float(alpha), disc)
    else:
        raise NoFeasibleAlphaError(previous, target, float(grid[0]))

    if above is None:
        logger.info(f"Morozov: upper bound alpha={alpha_max:g} already feasible")
        return MorozovResult(
            alpha=float(alpha_max), u=u, discrepancy=disc, target=target, monotone=monotone
        )

    lo, u_lo, disc_lo = float(alpha), u, disc
    hi = above[0]
    for _ in range(bisection_steps):
        mid = math.sqrt(lo * hi)
        u_mid, disc_mid = discrepancy(mid)
        if disc_mid <= target:
            lo, u_lo, disc_lo = mid, u_mid, disc_mid
        else:
            hi = mid
    logger.info(f"Morozov: alpha={lo:.6g}, discrepancy {disc_lo:.6g} <= {target:.6g}")
    return MorozovResult(
        alpha=lo,
        u=u_lo,
        discrepancy=disc_lo,
        target=target,
        next_alpha=above[0],
        next_discrepancy=above[1],
        monotone=monotone,
    )
