"""Built-in acceptance checks run by ``inverselab selftest``."""

import logging
import tempfile
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from inverselab.forward.schemas import BoundaryRule, Grid2D
from inverselab.forward.service import (
    backward_difference_operator,
    convolution_operator,
    gaussian_kernel,
    gradient_operator,
    integration_operator,
    radon_operator,
)
from inverselab.harness.experiments import (
    EXPERIMENT_DEFAULTS,
    convergence_trend,
    deconv_problem,
    numdiff_errors,
    run_experiment,
    spectral_problem,
    spectral_samples,
    tv_denoise_problem,
)
from inverselab.harness.io import write_csv
from inverselab.harness.schemas import ExperimentConfig, ExperimentName
from inverselab.harness.service import support_size
from inverselab.learn.schemas import Activation
from inverselab.learn.service import (
    flatten_gradient,
    full_gradient,
    gradient_check,
    init_network,
    minibatch_gradient,
    train_spectral,
)
from inverselab.linop.schemas import LinearMap
from inverselab.linop.service import (
    adjoint_mismatch,
    compose,
    condition_numbers,
    dense_matrix,
    from_matrix,
    identity_map,
    operator_norm,
    svd,
)
from inverselab.prox.service import squared_l2_prox
from inverselab.rng import make_rng
from inverselab.solve.schemas import SolverConfig
from inverselab.solve.service import (
    admm,
    conjugate_gradient,
    gradient_descent,
    ista,
    proximal_point,
    tv_reconstruct,
)
from inverselab.spectral.schemas import SpectralFilter, SpectralStatistics
from inverselab.spectral.service import (
    filter_apply,
    map_gaussian_closed_form,
    moore_penrose_check,
    morozov_select_alpha,
    mse_optimal_filter,
    pseudo_inverse_matrix,
    tikhonov_solve_cg,
)

logger = logging.getLogger(__name__)

SELFTEST_COLUMNS = ["check", "passed", "detail"]
RATE_INSTANCES = 50
SGD_DRAWS = 10_000
TV_ITERATIONS = 2000
# Small runs of every CLI experiment, repeated by the determinism check
DETERMINISM_RUNS: dict[ExperimentName, dict] = {
    ExperimentName.NUMDIFF: {},
    ExperimentName.CT: {"n": 12, "angles": 12, "offsets": 17, "alphas": [0.01, 0.1]},
    ExperimentName.DECONV: {"method": "ista"},
    ExperimentName.TV: {"n": 16, "max_iter": 100},
    ExperimentName.LEARN_SPECTRAL: {"modes": 4, "samples": 400, "epochs": 5, "batch_size": 100},
}


class CheckResult(BaseModel):
    """Outcome of one acceptance check."""

    check: str
    passed: bool
    detail: str


def random_spd(rng: np.random.Generator, n: int, lo: float, hi: float) -> np.ndarray:
    """Symmetric matrix with eigenvalues drawn uniformly from [lo, hi]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(lo, hi, size=n)) @ Q.T


def shipped_operators() -> dict[str, LinearMap]:
    """One instance of every forward operator."""
    kernel = gaussian_kernel(1.0, 2)
    grid = Grid2D.centered(16)
    ops = {
        "integration": integration_operator(32),
        "backward_difference": backward_difference_operator(32),
        "radon": radon_operator(
            grid, np.arange(8) * (np.pi / 8), np.linspace(-1.4, 1.4, 23)
        ),
        "gradient": gradient_operator(8, 8),
    }
    for rule in BoundaryRule:
        ops[f"convolution_{rule.value}"] = convolution_operator((12, 12), kernel, rule)
    return ops


def check_adjoint_identities(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    worst = 0.0
    for op in shipped_operators().values():
        for _ in range(100):
            x = rng.standard_normal(op.cols)
            y = rng.standard_normal(op.rows)
            worst = max(worst, adjoint_mismatch(op, x, y))
    return bool(worst <= 1e-10), f"max scaled mismatch {worst:.3e}"


def check_inverse_pair(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    worst = 0.0
    for N in (2, 17, 128, 512):
        op = compose(integration_operator(N), backward_difference_operator(N))
        x = rng.standard_normal(N)
        worst = max(worst, float(np.max(np.abs(op.matvec(x) - x))))
    return bool(worst <= 1e-12), f"max deviation {worst:.3e}"


def check_ill_conditioning(seed: int) -> tuple[bool, str]:
    conds = [condition_numbers(dense_matrix(integration_operator(N)))[0] for N in (16, 64, 256)]
    cond_ok = all(c > N - 1 for c, N in zip(conds, (16, 64, 256), strict=True))
    low = numdiff_errors(200, 0.01, 1, seed=seed)["recon_linf_err"]
    high = numdiff_errors(200, 0.01, 64, seed=seed)["recon_linf_err"]
    ratio = high / low
    return bool(cond_ok and ratio > 10), f"cond {conds[-1]:.3e} at N=256, error ratio {ratio:.3g}"


def check_moore_penrose(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(20):
        A = rng.standard_normal((6, 4))
        report = moore_penrose_check(A, pseudo_inverse_matrix(svd(A)), tol=1e-9)
        worst = max(worst, report.max_deviation)
    return bool(worst <= 1e-9), f"max deviation {worst:.3e}"


def check_tikhonov_triangle(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(3):
        A = rng.standard_normal((12, 12))
        f = rng.standard_normal(12)
        factor = svd(A)
        for alpha in (1e-3, 1e-1, 1.0):
            u_svd = filter_apply(factor, SpectralFilter.tikhonov(alpha), f)
            u_cg, _ = tikhonov_solve_cg(from_matrix(A), f, alpha)
            u_map = map_gaussian_closed_form(A, f, alpha)
            scale = max(1.0, float(np.linalg.norm(u_map)))
            for a, b in ((u_svd, u_cg), (u_cg, u_map), (u_svd, u_map)):
                worst = max(worst, float(np.linalg.norm(a - b)) / scale)
    return bool(worst <= 1e-6), f"max relative disagreement {worst:.3e}"


def _quadratic(rng: np.random.Generator, n: int, lo: float, hi: float):
    Q = random_spd(rng, n, lo, hi)
    b = rng.standard_normal(n)
    u_star = np.linalg.solve(Q, b)

    def J(u: np.ndarray) -> float:
        return 0.5 * float(u @ Q @ u) - float(b @ u)

    return Q, b, u_star, J


def check_gd_rates(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    violations = 0
    for _ in range(RATE_INSTANCES):
        Q, b, u_star, J = _quadratic(rng, 8, 0.1, 1.0)
        eigenvalues = np.linalg.eigvalsh(Q)
        nu, L = float(eigenvalues[0]), float(eigenvalues[-1])
        u0 = rng.standard_normal(8)
        r0 = float(np.sum((u0 - u_star) ** 2))
        J_star = J(u_star)

        def grad(u: np.ndarray, Q=Q, b=b) -> np.ndarray:
            return Q @ u - b

        iterates: list[np.ndarray] = []

        def keep(k: int, state: dict, it=iterates) -> None:
            it.append(state["u"])

        gradient_descent(grad, u0, 1.0 / L, 200, callback=keep)
        for k, u in enumerate(iterates, start=1):
            if J(u) - J_star > r0 * L / (2.0 * k) + 1e-12:
                violations += 1

        iterates.clear()
        tau = 0.9 / L
        gradient_descent(grad, u0, tau, 200, callback=keep)
        for k, u in enumerate(iterates, start=1):
            if float(np.sum((u - u_star) ** 2)) > (1.0 - nu * tau) ** k * r0 * (1 + 1e-9) + 1e-24:
                violations += 1
    return bool(violations == 0), f"{violations} violations"


def check_proximal_point_rates(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    violations = 0
    for _ in range(RATE_INSTANCES):
        c = rng.standard_normal(5)
        u0 = rng.standard_normal(5)
        tau = float(rng.uniform(0.1, 2.0))
        r0 = float(np.sum((u0 - c) ** 2))
        iterates: list[np.ndarray] = []
        proximal_point(
            squared_l2_prox(c), u0, tau, 50, callback=lambda k, s: iterates.append(s["u"])
        )
        for k, u in enumerate(iterates, start=1):
            gap = 0.5 * float(np.sum((u - c) ** 2))
            if gap > r0 / (2.0 * tau * k) + 1e-15:
                violations += 1
            if float(np.sum((u - c) ** 2)) > (1.0 + tau) ** (-k) * r0 * (1 + 1e-9) + 1e-30:
                violations += 1
    return bool(violations == 0), f"{violations} violations"


def check_cg_exactness(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    worst_iters = 0
    failures = 0
    for _ in range(20):
        n = int(rng.integers(2, 31))
        C = random_spd(rng, n, 1.0, 10.0)
        b = rng.standard_normal(n)
        u, log = conjugate_gradient(from_matrix(C), b, max_iter=n, tol=1e-10)
        worst_iters = max(worst_iters, log.iterations - n)
        if float(np.linalg.norm(C @ u - b)) > 1e-10 or not log.converged:
            failures += 1
    return bool(failures == 0), f"{failures} failures, worst excess iterations {worst_iters}"


def check_ista_scalar(seed: int) -> tuple[bool, str]:
    u, _ = ista(from_matrix(np.array([[1.0]])), np.array([3.0]), 1.0, 1.0, max_iter=100)
    error = abs(float(u[0]) - 2.0)
    return bool(error <= 1e-8), f"|u - 2| = {error:.3e}"


def check_ista_lasso(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    M = rng.standard_normal((40, 10))
    f = rng.standard_normal(40)
    A = from_matrix(M)
    tau = 1.0 / float(np.linalg.norm(M, 2)) ** 2
    _, log = ista(A, f, 1.0, tau, max_iter=500)
    _, reference = ista(A, f, 1.0, tau, max_iter=2000)
    a, b = log.objectives()[-1], reference.objectives()[-1]
    return bool(abs(a - b) <= 1e-6), f"objective {a:.12g}, reference {b:.12g}"


def check_ista_sparsity(seed: int) -> tuple[bool, str]:
    defaults = EXPERIMENT_DEFAULTS[ExperimentName.DECONV]
    A, _, f_delta = deconv_problem(
        defaults["n"], defaults["spikes"], defaults["sigma"], defaults["delta"], seed
    )
    alpha = defaults["alpha"]
    u_l2, _ = tikhonov_solve_cg(A, f_delta, alpha)
    tau = 1.0 / operator_norm(A) ** 2
    u_l1, _ = ista(A, f_delta, alpha, tau, max_iter=defaults["max_iter"])
    sparse, dense = support_size(u_l1), support_size(u_l2)
    return bool(sparse < dense), f"support {sparse} (ista) vs {dense} (tikhonov)"


def check_morozov(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    failures = 0
    sigma = np.linspace(1.0, 0.01, 20)
    A = from_matrix(np.diag(sigma))
    for _ in range(10):
        f = sigma * rng.standard_normal(20)
        noise = rng.standard_normal(20)
        delta = 0.05
        f_delta = f + delta * noise / np.linalg.norm(noise)
        result = morozov_select_alpha(
            lambda a, fd=f_delta: sigma / (sigma**2 + a) * fd, A, f_delta, delta, mu=1.0
        )
        if result.discrepancy > result.target:
            failures += 1
        if result.next_discrepancy is not None and result.next_discrepancy <= result.target:
            failures += 1
    return bool(failures == 0), f"{failures} failures"


def _denoising_config() -> SolverConfig:
    step = 0.99 / 3.0
    return SolverConfig(tau=step, sigma=step, operator_norm=3.0, max_iter=TV_ITERATIONS)


def check_tv_agreement(seed: int) -> tuple[bool, str]:
    n = 32
    _, noisy = tv_denoise_problem(n, 0.1, seed)
    A = identity_map(n * n)
    f = noisy.reshape(-1)
    _, log_cp = tv_reconstruct(A, f, 0.1, _denoising_config())
    _, log_admm = admm(A, f, 0.1, mu=1.0, max_iter=TV_ITERATIONS)
    a, b = log_cp.objectives()[-1], log_admm.objectives()[-1]
    gap = abs(a - b) / max(1.0, abs(b))
    return bool(gap <= 1e-3), f"objectives {a:.10g} vs {b:.10g}"


def rof_2x2(points: np.ndarray, f: np.ndarray, alpha: float) -> np.ndarray:
    """ROF objective with identity forward map for rows [u00, u01, u10, u11]."""
    a, b, c, d = points.T
    tv = np.abs(c - a) + np.abs(d - b) + np.abs(b - a) + np.abs(d - c)
    return 0.5 * np.sum((points - f) ** 2, axis=1) + alpha * tv


def lattice_minimum(f: np.ndarray, alpha: float, points: int = 21, levels: int = 8) -> float:
    """Brute-force ROF minimum of a 2 x 2 image on successively refined lattices.

    The minimizer lies in [min f, max f]^4. Each level searches a full lattice
    and recentres a window of three lattice steps on the best point.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    center = np.full(4, 0.5 * (f.min() + f.max()))
    half = 0.5 * (f.max() - f.min()) + 1e-12
    best = np.inf
    for _ in range(levels):
        axis = np.linspace(-half, half, points)
        mesh = np.meshgrid(axis, axis, axis, axis, indexing="ij")
        grid = center + np.stack(mesh, axis=-1).reshape(-1, 4)
        values = rof_2x2(grid, f, alpha)
        i = int(np.argmin(values))
        best = min(best, float(values[i]))
        center = grid[i]
        half = 3.0 * (axis[1] - axis[0])
    return best


def check_tv_lattice(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(5):
        f = rng.uniform(0.0, 1.0, size=4)
        _, log = tv_reconstruct(identity_map(4), f, 0.2, _denoising_config(), shape=(2, 2))
        worst = max(worst, abs(log.objectives()[-1] - lattice_minimum(f, 0.2)))
    return bool(worst <= 1e-3), f"max gap to lattice minimum {worst:.3e}"


def check_backprop(seed: int) -> tuple[bool, str]:
    zoo = [
        ([4, 3], [Activation.identity()]),
        ([4, 3], [Activation.sigmoid()]),
        ([3, 5, 2], [Activation.relu(), Activation.identity()]),
        ([3, 5, 2], [Activation.sigmoid(), Activation.identity()]),
        ([4, 6, 3], [Activation.prelu(0.1), Activation.softmax()]),
        ([2, 4, 4, 1], [Activation.sigmoid(), Activation.prelu(0.3), Activation.identity()]),
    ]
    rng = make_rng(seed)
    worst = 0.0
    for i in range(20):
        sizes, acts = zoo[i % len(zoo)]
        net = init_network(sizes, acts, seed + i)
        x = rng.standard_normal((3, sizes[0]))
        y = rng.standard_normal((3, sizes[-1]))
        worst = max(worst, gradient_check(net, x, y))
    return bool(worst <= 1e-5), f"max relative error {worst:.3e}"


def check_sgd_unbiasedness(seed: int) -> tuple[bool, str]:
    rng = make_rng(seed)
    net = init_network([2, 1], [Activation.sigmoid()], seed)
    X = rng.standard_normal((40, 2))
    Y = rng.uniform(size=(40, 1))
    full = flatten_gradient(full_gradient(net, X, Y))
    draws = np.array(
        [
            flatten_gradient(minibatch_gradient(net, X, Y, rng.choice(40, size=5, replace=False)))
            for _ in range(SGD_DRAWS)
        ]
    )
    deviation = np.abs(draws.mean(axis=0) - full)
    stderr = draws.std(axis=0, ddof=1) / np.sqrt(SGD_DRAWS)
    outside = int(np.count_nonzero(deviation > 3.0 * stderr + 1e-15))
    worst = float(np.max(deviation / np.maximum(stderr, 1e-300)))
    return bool(outside == 0), f"{outside} components beyond 3 standard errors, max {worst:.2f}"


def check_learned_spectral(seed: int) -> tuple[bool, str]:
    A, factor = spectral_problem(10)
    delta = 0.05
    U, _, F = spectral_samples(A, 10000, delta, seed)
    model = train_spectral(factor, U, F, tau=1.0, epochs=50, seed=seed, batch_size=500)
    stats = SpectralStatistics(delta=np.full(10, delta**2), pi=np.ones(10))
    closed = mse_optimal_filter(factor, stats).coefficients(factor.singular_values)
    noisy_gap = float(np.max(np.abs(model.theta - closed)))

    U0, _, F0 = spectral_samples(A, 10000, 0.0, seed + 1)
    clean = train_spectral(factor, U0, F0, tau=1.0, epochs=50, seed=seed, batch_size=500)
    clean_gap = float(np.max(np.abs(clean.theta - 1.0 / factor.singular_values)))
    passed = noisy_gap <= 5e-2 and clean_gap <= 1e-3
    return bool(passed), f"noisy gap {noisy_gap:.3e}, noiseless gap {clean_gap:.3e}"


def check_convergence_trend(seed: int) -> tuple[bool, str]:
    A, factor = spectral_problem(10)
    errors = [row["median_error"] for row in convergence_trend(A, factor, seed)]
    decreasing = all(b < a for a, b in zip(errors, errors[1:], strict=False))
    return bool(decreasing), "median errors " + " ".join(f"{e:.3e}" for e in errors)


def _experiment_outputs(experiment: ExperimentName, values: dict, seed: int) -> dict[str, bytes]:
    with tempfile.TemporaryDirectory(prefix="inverselab-") as tmp:
        cfg = ExperimentConfig(experiment=experiment, seed=seed, output_dir=Path(tmp), **values)
        return {path.name: path.read_bytes() for path in run_experiment(cfg)}


def check_determinism(seed: int) -> tuple[bool, str]:
    differing = []
    compared = 0
    for experiment, values in DETERMINISM_RUNS.items():
        first = _experiment_outputs(experiment, values, seed)
        second = _experiment_outputs(experiment, values, seed)
        compared += sum(len(data) for data in first.values())
        if first != second:
            differing.append(experiment.value)
    if differing:
        return False, "outputs differ for " + ", ".join(differing)
    return True, f"{compared} bytes identical across {len(DETERMINISM_RUNS)} experiments"


CHECKS: list[tuple[str, Callable[[int], tuple[bool, str]]]] = [
    ("adjoint_identities", check_adjoint_identities),
    ("inverse_pair", check_inverse_pair),
    ("ill_conditioning", check_ill_conditioning),
    ("moore_penrose", check_moore_penrose),
    ("tikhonov_triangle", check_tikhonov_triangle),
    ("gradient_descent_rates", check_gd_rates),
    ("proximal_point_rates", check_proximal_point_rates),
    ("cg_exactness", check_cg_exactness),
    ("ista_scalar", check_ista_scalar),
    ("ista_lasso", check_ista_lasso),
    ("ista_sparsity", check_ista_sparsity),
    ("morozov", check_morozov),
    ("tv_agreement", check_tv_agreement),
    ("tv_lattice", check_tv_lattice),
    ("backprop", check_backprop),
    ("sgd_unbiasedness", check_sgd_unbiasedness),
    ("learned_spectral", check_learned_spectral),
    ("convergence_trend", check_convergence_trend),
    ("determinism", check_determinism),
]


def run_checks(seed: int) -> list[CheckResult]:
    """Run every check; a raised exception counts as a failure."""
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check(seed)
        except Exception as e:
            logger.error(f"selftest {name} raised: {e}")
            passed, detail = False, f"{type(e).__name__}: {e}"
        level = logging.INFO if passed else logging.ERROR
        logger.log(level, f"selftest {name}: {'ok' if passed else 'FAILED'} ({detail})")
        results.append(CheckResult(check=name, passed=bool(passed), detail=detail))
    return results


def run_selftest(cfg: ExperimentConfig) -> tuple[list[Path], bool]:
    """Run the acceptance checks and write ``selftest.csv``.

    Returns:
        tuple: Written files and whether every check passed.
    """
    results = run_checks(cfg.seed)
    table = pd.DataFrame([r.model_dump() for r in results], columns=SELFTEST_COLUMNS)
    path = write_csv(table, cfg.output_dir / "selftest.csv")
    passed = all(r.passed for r in results)
    failed = [r.check for r in results if not r.passed]
    if failed:
        names = ", ".join(failed)
        logger.error(f"selftest: {len(failed)} of {len(results)} checks failed: {names}")
    else:
        logger.info(f"selftest: all {len(results)} checks passed")
    return [path], passed
