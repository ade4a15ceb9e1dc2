"""Desk-scale experiments behind the CLI subcommands.

Each runner takes a resolved :class:`ExperimentConfig`, writes its result
files into ``cfg.output_dir`` and returns their paths. Runs are pure
functions of the configuration.
"""

import logging
import math
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd

from inverselab.forward.schemas import BoundaryRule, Grid2D
from inverselab.forward.service import (
    backward_difference_operator,
    convolution_operator,
    gaussian_kernel,
    integration_operator,
    radon_operator,
)
from inverselab.harness.io import write_csv, write_pgm
from inverselab.harness.phantoms import phantom_ellipses
from inverselab.harness.schemas import ExperimentConfig, ExperimentName, ImageBuffer, NoiseMode
from inverselab.harness.service import add_noise, metrics, sparse_spikes, support_size
from inverselab.learn.service import spectral_forward, spectral_statistics, train_spectral
from inverselab.linop.schemas import LinearMap, SvdFactorization
from inverselab.linop.service import (
    condition_numbers,
    dense_matrix,
    identity_map,
    operator_norm,
    svd,
)
from inverselab.rng import make_rng
from inverselab.solve.schemas import SolverConfig
from inverselab.solve.service import admm, ista, tv_reconstruct
from inverselab.spectral.schemas import SpectralStatistics
from inverselab.spectral.service import (
    filter_apply,
    morozov_select_alpha,
    mse_optimal_filter,
    pseudo_inverse_apply,
    tikhonov_solve_cg,
    tikhonov_solve_gd,
)

logger = logging.getLogger(__name__)

NUMDIFF_COLUMNS = ["k", "delta", "data_l2_err", "data_linf_err", "recon_l2_err", "recon_linf_err"]
CT_COLUMNS = ["method", "alpha", "l2_err", "linf_err", "psnr", "discrepancy", "iterations"]
DECONV_COLUMNS = [
    "method",
    "alpha",
    "l2_err",
    "linf_err",
    "support_size",
    "true_support",
    "iterations",
]
DECONV_SIGNAL_COLUMNS = ["index", "truth", "data", "tikhonov", "ista"]
TV_COLUMNS = ["solver", "iterations", "objective", "l2_err", "linf_err", "psnr"]
TV_TRACE_COLUMNS = ["k", "cp_objective", "admm_objective"]
SPECTRAL_COLUMNS = ["index", "sigma", "theta_learned", "theta_closed_form", "abs_diff"]
CONVERGENCE_COLUMNS = ["n", "delta", "median_error"]

EXPERIMENT_DEFAULTS: dict[ExperimentName, dict] = {
    ExperimentName.NUMDIFF: {
        "n": 200,
        "delta": 0.01,
        "noise": "sine",
        "k_values": [1, 2, 4, 8, 16, 32, 64],
    },
    ExperimentName.CT: {
        "n": 24,
        "delta": 0.5,
        "method": "tikhonov",
        "angles": 36,
        "offsets": 35,
        "alphas": [1e-3, 1e-2, 1e-1, 1.0],
        "max_iter": 500,
    },
    ExperimentName.DECONV: {
        "n": 16,
        "delta": 0.01,
        "alpha": 0.1,
        "method": "tikhonov",
        "spikes": 8,
        "sigma": 1.5,
        "max_iter": 500,
    },
    ExperimentName.TV: {"n": 32, "delta": 0.1, "alpha": 0.1, "max_iter": 2000},
    ExperimentName.LEARN_SPECTRAL: {
        "modes": 10,
        "samples": 10000,
        "delta": 0.05,
        "epochs": 50,
        "tau": 1.0,
        "batch_size": 500,
    },
}

SPECTRAL_SIGMA_RANGE = (1.0, 0.3)
CONVERGENCE_LEVELS = 6
CONVERGENCE_SEEDS = 3
CONVERGENCE_TEST_SAMPLES = 2000
# ||[I; grad]||^2 <= 1 + 8 for forward differences in two dimensions
TV_OPERATOR_NORM_BOUND = 3.0


def _image_to_grid(values: np.ndarray) -> np.ndarray:
    """Display layout (row 0 at the top) to grid layout indexed [x, y]."""
    return values[::-1, :].T


def _grid_to_image(values: np.ndarray) -> np.ndarray:
    return values.T[::-1, :]


def _frame(columns: list[str], rows: list[dict]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=columns)


# --- numdiff ---


def numdiff_signal(t: np.ndarray) -> np.ndarray:
    """u(t) = sin(2 pi t) + (t - 1/2)^2 - 1/4."""
    return np.sin(2.0 * np.pi * t) + (t - 0.5) ** 2 - 0.25


def numdiff_errors(n: int, delta: float, k: int, noise: str = "sine", seed: int = 1) -> dict:
    """Data and reconstruction errors of numerical differentiation.

    ``sine`` noise is eps(t) = delta sin(2 pi k t); ``gaussian`` noise is
    i.i.d. N(0, delta^2) and ignores k.
    """
    t = np.linspace(0.0, 1.0, n)
    u = numdiff_signal(t)
    f = integration_operator(n).matvec(u)
    if noise == "sine":
        f_delta = f + delta * np.sin(2.0 * np.pi * k * t)
    elif noise == "gaussian":
        f_delta = add_noise(f, delta, seed, NoiseMode.GAUSSIAN_SIGMA)
    else:
        raise ValueError(f"unknown numdiff noise {noise!r}, expected 'sine' or 'gaussian'")
    recon = backward_difference_operator(n).matvec(f_delta)
    data_l2, data_linf, _ = metrics(f_delta, f)
    recon_l2, recon_linf, _ = metrics(recon, u)
    return {
        "k": k,
        "delta": delta,
        "data_l2_err": data_l2,
        "data_linf_err": data_linf,
        "recon_l2_err": recon_l2,
        "recon_linf_err": recon_linf,
    }


def run_numdiff(cfg: ExperimentConfig) -> list[Path]:
    """Sweep the noise frequency k and record how differentiation amplifies it."""
    if cfg.noise == "gaussian":
        rows = [numdiff_errors(cfg.n, cfg.delta, 0, "gaussian", cfg.seed)]
    else:
        rows = [numdiff_errors(cfg.n, cfg.delta, k, cfg.noise, cfg.seed) for k in cfg.k_values]
    for row in rows:
        logger.info(f"numdiff k={row['k']}: reconstruction max error {row['recon_linf_err']:.4g}")
    cond_mle, _ = condition_numbers(dense_matrix(integration_operator(cfg.n)))
    logger.info(f"numdiff: condition number of the integration system {cond_mle:.4g}")
    return [write_csv(_frame(NUMDIFF_COLUMNS, rows), cfg.output_dir / "numdiff.csv")]


# --- ct ---


def ct_geometry(n: int, n_angles: int, n_offsets: int) -> tuple[Grid2D, np.ndarray, np.ndarray]:
    """Grid on [-1, 1]^2 with angles in [0, pi) and offsets covering the diagonal."""
    grid = Grid2D.centered(n)
    angles = np.arange(n_angles) * (np.pi / n_angles)
    offsets = np.linspace(-math.sqrt(2.0), math.sqrt(2.0), n_offsets)
    return grid, angles, offsets


def _ct_row(
    method: str,
    alpha: float,
    u: np.ndarray,
    truth: np.ndarray,
    A: LinearMap,
    f: np.ndarray,
    iterations: int,
) -> dict:
    l2, linf, psnr = metrics(u, truth)
    return {
        "method": method,
        "alpha": alpha,
        "l2_err": l2,
        "linf_err": linf,
        "psnr": psnr,
        "discrepancy": float(np.linalg.norm(A.matvec(u) - f)),
        "iterations": iterations,
    }


def run_ct(cfg: ExperimentConfig) -> list[Path]:
    """Phantom, Radon data and noise, reconstructed by pinv, Tikhonov, GD or Morozov."""
    out = cfg.output_dir
    phantom = phantom_ellipses(cfg.n)
    grid, angles, offsets = ct_geometry(cfg.n, cfg.angles, cfg.offsets)
    A = radon_operator(grid, angles, offsets)
    truth = _image_to_grid(phantom.values).reshape(-1)
    f = A.matvec(truth)
    f_delta = add_noise(f, cfg.delta, cfg.seed, NoiseMode.SCALED_TO_NORM)
    cg_cfg = SolverConfig(max_iter=cfg.max_iter, tol=1e-8)

    written = [write_pgm(phantom, out / "phantom.pgm")]
    sino = f_delta.reshape(len(angles), len(offsets))
    written.append(write_pgm(ImageBuffer.from_array(sino), out / "sinogram.pgm"))

    results: list[tuple[str, float, np.ndarray, int]] = []
    if cfg.method == "pinv":
        factor = svd(dense_matrix(A))
        s = factor.singular_values
        logger.info(f"ct: singular values from {s[0]:.4g} to {s[-1]:.4g}, rank {factor.rank}")
        results.append(("pinv", 0.0, pseudo_inverse_apply(factor, f_delta), 0))
    elif cfg.method in ("tikhonov", "gd"):
        alphas = cfg.alphas if cfg.alpha is None else [cfg.alpha]
        for alpha in alphas:
            if cfg.method == "tikhonov":
                u, log = tikhonov_solve_cg(A, f_delta, alpha, cg_cfg)
            else:
                u, log = tikhonov_solve_gd(A, f_delta, alpha, max_iter=cfg.max_iter)
            results.append((cfg.method, float(alpha), u, log.iterations))
    elif cfg.method == "morozov":
        choice = morozov_select_alpha(
            lambda a: tikhonov_solve_cg(A, f_delta, a, cg_cfg)[0], A, f_delta, cfg.delta, cfg.mu
        )
        results.append(("morozov", choice.alpha, choice.u, 0))
    else:
        raise ValueError(f"unknown ct method {cfg.method!r}")

    rows = []
    for i, (method, alpha, u, its) in enumerate(results):
        row = _ct_row(method, alpha, u, truth, A, f_delta, its)
        rows.append(row)
        logger.info(f"ct {method} alpha={alpha:.4g}: l2 error {row['l2_err']:.4g}")
        image = ImageBuffer(values=_grid_to_image(u.reshape(grid.shape)), lo=0.0, hi=1.0)
        written.append(write_pgm(image, out / f"recon_{method}_{i}.pgm"))
    written.append(write_csv(_frame(CT_COLUMNS, rows), out / "ct.csv"))
    return written


# --- deconv ---


def deconv_problem(
    side: int, spikes: int, sigma: float, delta: float, seed: int
) -> tuple[LinearMap, np.ndarray, np.ndarray]:
    """Blurred, noisy spike image: (operator, truth, data), all flattened."""
    radius = max(1, min(int(math.ceil(3.0 * sigma)), side - 1))
    A = convolution_operator((side, side), gaussian_kernel(sigma, radius), BoundaryRule.ZERO)
    truth = sparse_spikes(side * side, spikes, seed)
    f_delta = add_noise(A.matvec(truth), delta, seed + 1, NoiseMode.GAUSSIAN_SIGMA)
    return A, truth, f_delta


def run_deconv(cfg: ExperimentConfig) -> list[Path]:
    """Spike deconvolution by Tikhonov and, with ``method = ista``, by ISTA."""
    A, truth, f_delta = deconv_problem(cfg.n, cfg.spikes, cfg.sigma, cfg.delta, cfg.seed)
    true_support = support_size(truth)

    def row(method: str, u: np.ndarray, its: int) -> dict:
        l2, linf, _ = metrics(u, truth)
        return {
            "method": method,
            "alpha": cfg.alpha,
            "l2_err": l2,
            "linf_err": linf,
            "support_size": support_size(u),
            "true_support": true_support,
            "iterations": its,
        }

    u_l2, log_l2 = tikhonov_solve_cg(A, f_delta, cfg.alpha)
    rows = [row("tikhonov", u_l2, log_l2.iterations)]
    u_ista = np.full_like(u_l2, np.nan)
    if cfg.method == "ista":
        tau = 1.0 / operator_norm(A) ** 2
        u_ista, log_ista = ista(A, f_delta, cfg.alpha, tau, max_iter=cfg.max_iter)
        rows.append(row("ista", u_ista, log_ista.iterations))
    elif cfg.method != "tikhonov":
        raise ValueError(f"unknown deconv method {cfg.method!r}")
    for r in rows:
        logger.info(f"deconv {r['method']}: support {r['support_size']} (true {true_support})")

    signal = pd.DataFrame(
        {
            "index": np.arange(truth.shape[0]),
            "truth": truth,
            "data": f_delta,
            "tikhonov": u_l2,
            "ista": u_ista,
        },
        columns=DECONV_SIGNAL_COLUMNS,
    )
    return [
        write_csv(_frame(DECONV_COLUMNS, rows), cfg.output_dir / "deconv.csv"),
        write_csv(signal, cfg.output_dir / "deconv_signal.csv"),
    ]


# --- tv ---


def tv_denoise_problem(n: int, delta: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Phantom and its noisy copy, both n x n."""
    truth = phantom_ellipses(n).values
    return truth, add_noise(truth, delta, seed, NoiseMode.GAUSSIAN_SIGMA)


def run_tv(cfg: ExperimentConfig) -> list[Path]:
    """ROF denoising of the phantom by Chambolle-Pock and by ADMM with penalty ``mu``."""
    out = cfg.output_dir
    truth, noisy = tv_denoise_problem(cfg.n, cfg.delta, cfg.seed)
    A = identity_map(cfg.n * cfg.n)
    f = noisy.reshape(-1)
    step = 0.99 / TV_OPERATOR_NORM_BOUND
    cp_cfg = SolverConfig(
        tau=step, sigma=step, operator_norm=TV_OPERATOR_NORM_BOUND, max_iter=cfg.max_iter
    )
    u_cp, log_cp = tv_reconstruct(A, f, cfg.alpha, cp_cfg)
    u_admm, log_admm = admm(A, f, cfg.alpha, mu=cfg.mu, max_iter=cfg.max_iter)

    rows = []
    for name, u, log in (("chambolle_pock", u_cp, log_cp), ("admm", u_admm, log_admm)):
        l2, linf, psnr = metrics(u, truth)
        objective = log.objectives()[-1] if log.records else math.nan
        rows.append(
            {
                "solver": name,
                "iterations": log.iterations,
                "objective": objective,
                "l2_err": l2,
                "linf_err": linf,
                "psnr": psnr,
            }
        )
        logger.info(f"tv {name}: objective {objective:.10g} after {log.iterations} iterations")

    steps = max(log_cp.iterations, log_admm.iterations)
    trace = pd.DataFrame(
        {
            "k": np.arange(1, steps + 1),
            "cp_objective": _padded(log_cp.objectives(), steps),
            "admm_objective": _padded(log_admm.objectives(), steps),
        },
        columns=TV_TRACE_COLUMNS,
    )
    return [
        write_pgm(ImageBuffer(values=truth), out / "phantom.pgm"),
        write_pgm(ImageBuffer(values=noisy, lo=0.0, hi=1.0), out / "noisy.pgm"),
        write_pgm(ImageBuffer(values=u_cp), out / "tv_cp.pgm"),
        write_pgm(ImageBuffer(values=u_admm), out / "tv_admm.pgm"),
        write_csv(_frame(TV_COLUMNS, rows), out / "tv.csv"),
        write_csv(trace, out / "tv_trace.csv"),
    ]


def _padded(values: np.ndarray, length: int) -> np.ndarray:
    out = np.full(length, np.nan)
    out[: values.shape[0]] = values
    return out


# --- learn-spectral ---


def spectral_problem(modes: int) -> tuple[np.ndarray, SvdFactorization]:
    """Diagonal operator with singular values evenly spaced in [0.3, 1]."""
    sigma = np.linspace(SPECTRAL_SIGMA_RANGE[0], SPECTRAL_SIGMA_RANGE[1], modes)
    A = np.diag(sigma)
    return A, svd(A)


def spectral_samples(
    A: np.ndarray, samples: int, delta: float, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signals u ~ N(0, I), noise eps ~ N(0, delta^2 I) and data A u + eps, one per row."""
    rng = make_rng(seed)
    U = rng.standard_normal((samples, A.shape[1]))
    E = delta * rng.standard_normal((samples, A.shape[0]))
    return U, E, U @ A.T + E


def convergence_trend(
    A: np.ndarray,
    factor: SvdFactorization,
    seed: int,
    levels: int = CONVERGENCE_LEVELS,
    seeds: int = CONVERGENCE_SEEDS,
    samples: int = CONVERGENCE_TEST_SAMPLES,
) -> list[dict]:
    """Median over seeds of the MSE-optimal filter's mean squared error for delta_n = 2^-n."""
    rows = []
    for n in range(1, levels + 1):
        delta = 2.0**-n
        stats = SpectralStatistics(
            delta=np.full(factor.rank, delta**2), pi=np.ones(factor.rank)
        )
        filt = mse_optimal_filter(factor, stats)
        errors = []
        for s in range(seeds):
            U, _, F = spectral_samples(A, samples, delta, seed + 1000 * s + n)
            recon = np.array([filter_apply(factor, filt, f) for f in F])
            errors.append(float(np.mean(np.sum((recon - U) ** 2, axis=1))))
        rows.append({"n": n, "delta": delta, "median_error": float(np.median(errors))})
    return rows


def run_learn_spectral(cfg: ExperimentConfig) -> list[Path]:
    """Train per-mode coefficients by SGD and compare them with the closed form."""
    A, factor = spectral_problem(cfg.modes)
    U, E, F = spectral_samples(A, cfg.samples, cfg.delta, cfg.seed)
    model = train_spectral(
        factor, U, F, tau=cfg.tau, epochs=cfg.epochs, seed=cfg.seed, batch_size=cfg.batch_size
    )
    stats, noise_level = spectral_statistics(E, U, factor)
    logger.info(f"learn-spectral: statistical noise level {noise_level:.4g}")
    exact = SpectralStatistics(
        delta=np.full(factor.rank, cfg.delta**2), pi=np.ones(factor.rank)
    )
    closed = mse_optimal_filter(factor, exact).coefficients(factor.singular_values)

    rows = []
    for i, (s, learned, best) in enumerate(
        zip(factor.singular_values, model.theta, closed, strict=True)
    ):
        rows.append(
            {
                "index": i,
                "sigma": float(s),
                "theta_learned": float(learned),
                "theta_closed_form": float(best),
                "abs_diff": abs(float(learned) - float(best)),
            }
        )
    worst = max(r["abs_diff"] for r in rows)
    logger.info(f"learn-spectral: max |theta - closed form| = {worst:.3e}")
    train_error = float(
        np.mean(
            [
                np.sum((spectral_forward(model, f) - u) ** 2)
                for u, f in zip(U[:100], F[:100], strict=True)
            ]
        )
    )
    logger.debug(f"learn-spectral: mean squared error on 100 training samples {train_error:.4g}")

    trend = convergence_trend(A, factor, cfg.seed)
    return [
        write_csv(_frame(SPECTRAL_COLUMNS, rows), cfg.output_dir / "learn_spectral.csv"),
        write_csv(_frame(CONVERGENCE_COLUMNS, trend), cfg.output_dir / "convergence.csv"),
    ]


RUNNERS: dict[ExperimentName, Callable[[ExperimentConfig], list[Path]]] = {
    ExperimentName.NUMDIFF: run_numdiff,
    ExperimentName.CT: run_ct,
    ExperimentName.DECONV: run_deconv,
    ExperimentName.TV: run_tv,
    ExperimentName.LEARN_SPECTRAL: run_learn_spectral,
}


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Fill in per-experiment defaults and run."""
    if cfg.experiment not in RUNNERS:
        raise ValueError(f"{cfg.experiment.value} is not a data experiment")
    resolved = cfg.resolved(EXPERIMENT_DEFAULTS[cfg.experiment])
    logger.info(f"Running {resolved.experiment.value} with seed {resolved.seed}")
    return RUNNERS[resolved.experiment](resolved)
