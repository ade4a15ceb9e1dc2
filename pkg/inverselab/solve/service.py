"""First-order solvers: GD, CG, proximal point, PGD/ISTA, Chambolle-Pock, ADMM and PnP."""

import logging
from collections.abc import Callable

import numpy as np

from inverselab.forward.service import div2d, grad2d, gradient_operator
from inverselab.linop.schemas import DimensionMismatchError, LinearMap
from inverselab.linop.service import operator_norm, stack
from inverselab.prox.schemas import ProxOp
from inverselab.prox.service import (
    l1_prox,
    project_inf_ball,
    prox_conj_datafit,
    rof_objective,
    shrink,
    zero_prox,
)
from inverselab.solve.schemas import (
    IterationLog,
    IterationRecord,
    NotPositiveDefiniteError,
    SolverConfig,
    SolverStatus,
    StepConditionError,
)

logger = logging.getLogger(__name__)

Gradient = Callable[[np.ndarray], np.ndarray]
Objective = Callable[[np.ndarray], float]
Callback = Callable[[int, dict[str, np.ndarray]], None]

ADMM_CG_TOL = 1e-10
ADMM_CG_MAX_ITER = 500


# --- Iteration bookkeeping ---


def _advance(
    log: IterationLog,
    k: int,
    u_old: np.ndarray,
    u_new: np.ndarray,
    tol: float,
    objective: Objective | None = None,
    residual: float | None = None,
    callback: Callback | None = None,
    state: dict[str, np.ndarray] | None = None,
    objective_every: int = 1,
) -> SolverStatus | None:
    """Record iteration k and apply the stopping rule.

    Returns:
        The final status when the run must stop, otherwise None.
    """
    if not np.all(np.isfinite(u_new)):
        return SolverStatus.DIVERGED
    step = float(np.linalg.norm(u_new - u_old))
    value = None
    if objective is not None and objective_every and k % objective_every == 0:
        value = float(objective(u_new))
    log.append(IterationRecord(k=k, objective=value, residual=residual, step=step))
    if callback is not None:
        snapshot = {"u": u_new.copy()}
        for name, arr in (state or {}).items():
            snapshot[name] = arr.copy()
        callback(k, snapshot)
    if step <= tol * (1.0 + float(np.linalg.norm(u_old))):
        return SolverStatus.CONVERGED
    return None


def _finish(log: IterationLog, status: SolverStatus | None) -> IterationLog:
    log.status = SolverStatus.MAX_ITER if status is None else status
    if log.status == SolverStatus.MAX_ITER:
        logger.warning(f"{log.solver}: iteration cap reached after {log.iterations} iterations")
    elif log.status == SolverStatus.DIVERGED:
        logger.warning(f"{log.solver}: non-finite iterate after {log.iterations} iterations")
    else:
        logger.debug(f"{log.solver}: converged after {log.iterations} iterations")
    return log


def _start(u0: np.ndarray) -> np.ndarray:
    return np.array(u0, dtype=float)


# --- Smooth methods ---


def gradient_descent(
    grad: Gradient,
    u0: np.ndarray,
    tau: float,
    max_iter: int,
    objective: Objective | None = None,
    tol: float = 0.0,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Gradient descent u^{k+1} = u^k - tau grad(u^k).

    Args:
        grad: Gradient of the objective.
        u0: Starting point.
        tau: Step size.
        max_iter: Iteration budget K.
        objective: Optional objective, evaluated at every new iterate.
        tol: Relative step tolerance of the stopping rule.
        callback: Called with (k, {"u": ...}).

    Returns:
        tuple: Last finite iterate and the iteration log.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    log = IterationLog(solver="gradient_descent")
    u = _start(u0)
    status = None
    for k in range(1, max_iter + 1):
        u_new = u - tau * grad(u)
        status = _advance(log, k, u, u_new, tol, objective, callback=callback)
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if status is not None:
            break
    return u, _finish(log, status)


def conjugate_gradient(
    C: LinearMap,
    b: np.ndarray,
    u0: np.ndarray | None = None,
    max_iter: int | None = None,
    tol: float = 1e-10,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Conjugate gradients for a symmetric positive definite C.

    Stops once ||b - C u|| <= tol. The callback state also carries the
    residual ``"r"``.

    Args:
        C: Symmetric positive definite operator.
        b: Right-hand side.
        u0: Starting point, zeros by default.
        max_iter: Iteration budget, 10 n by default.
        tol: Absolute residual tolerance.
        callback: Called with (k, {"u": ..., "r": ...}).

    Returns:
        tuple: Solution estimate and the iteration log.

    Raises:
        NotPositiveDefiniteError: If a search direction has <p, Cp> <= 0.
    """
    n = C.cols
    b = np.asarray(b, dtype=float)
    if b.shape[0] != C.rows:
        raise DimensionMismatchError("conjugate_gradient right-hand side", C.rows, b.shape[0])
    u = np.zeros(n) if u0 is None else _start(u0)
    budget = 10 * n if max_iter is None else max_iter
    log = IterationLog(solver="conjugate_gradient")

    r = b - C.matvec(u)
    rr = float(r @ r)
    if np.sqrt(rr) <= tol:
        log.status = SolverStatus.CONVERGED
        return u, log
    p = r.copy()
    status = None
    for k in range(1, budget + 1):
        Cp = C.matvec(p)
        pCp = float(p @ Cp)
        if pCp <= 0:
            raise NotPositiveDefiniteError(f"operator not PD: <p, Cp> = {pCp:.3e} at iteration {k}")
        alpha = rr / pCp
        u_new = u + alpha * p
        r = r - alpha * Cp
        rr_new = float(r @ r)
        res = float(np.sqrt(rr_new))
        status = _advance(log, k, u, u_new, 0.0, residual=res, callback=callback, state={"r": r})
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if res <= tol:
            status = SolverStatus.CONVERGED
            break
        status = None
        beta = rr_new / rr
        p = r + beta * p
        rr = rr_new
    return u, _finish(log, status)


# --- Proximal methods ---


def proximal_point(
    prox: ProxOp,
    u0: np.ndarray,
    tau: float,
    max_iter: int,
    objective: Objective | None = None,
    tol: float = 0.0,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Proximal point iteration u^{k+1} = prox_{tau J}(u^k).

    The objective defaults to the functional carried by ``prox``.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    objective = prox.objective if objective is None else objective
    log = IterationLog(solver="proximal_point")
    u = _start(u0)
    status = None
    for k in range(1, max_iter + 1):
        u_new = prox(u, tau)
        status = _advance(log, k, u, u_new, tol, objective, callback=callback)
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if status is not None:
            break
    return u, _finish(log, status)


def proximal_gradient(
    gradH: Gradient,
    proxG: ProxOp,
    u0: np.ndarray,
    tau: float,
    max_iter: int,
    objective: Objective | None = None,
    tol: float = 0.0,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Proximal gradient descent u^{k+1} = prox_{tau G}(u^k - tau gradH(u^k)).

    Args:
        gradH: Gradient of the smooth part H.
        proxG: Prox of the nonsmooth part G.
        u0: Starting point.
        tau: Step size, at most 1/L for the rate guarantee.
        max_iter: Iteration budget K.
        objective: Optional H + G for the trace.
        tol: Relative step tolerance.
        callback: Called with (k, {"u": ...}).

    Returns:
        tuple: Last finite iterate and the iteration log.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    log = IterationLog(solver=f"proximal_gradient[{proxG.name}]")
    u = _start(u0)
    status = None
    for k in range(1, max_iter + 1):
        u_new = proxG(u - tau * gradH(u), tau)
        status = _advance(log, k, u, u_new, tol, objective, callback=callback)
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if status is not None:
            break
    return u, _finish(log, status)


def least_squares_gradient(A: LinearMap, f: np.ndarray) -> Gradient:
    """Gradient A^T (A u - f) of H = 1/2 ||A u - f||^2."""
    f = np.asarray(f, dtype=float)
    return lambda u: A.rmatvec(A.matvec(u) - f)


def ista(
    A: LinearMap,
    f: np.ndarray,
    alpha: float,
    tau: float,
    u0: np.ndarray | None = None,
    max_iter: int = 500,
    tol: float = 0.0,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Iterated soft thresholding for 1/2 ||A u - f||^2 + alpha ||u||_1.

    Runs :func:`proximal_gradient` with the least-squares gradient and the
    l1 prox, so both produce identical traces.
    """
    f = np.asarray(f, dtype=float)

    def lasso(u: np.ndarray) -> float:
        r = A.matvec(u) - f
        return 0.5 * float(r @ r) + alpha * float(np.abs(u).sum())

    start = np.zeros(A.cols) if u0 is None else u0
    u, log = proximal_gradient(
        least_squares_gradient(A, f),
        l1_prox(alpha),
        start,
        tau,
        max_iter,
        objective=lasso,
        tol=tol,
        callback=callback,
    )
    log.solver = "ista"
    return u, log


def chambolle_pock(
    proxG: ProxOp,
    proxHstar: ProxOp,
    A: LinearMap,
    cfg: SolverConfig,
    u0: np.ndarray | None = None,
    p0: np.ndarray | None = None,
    objective: Objective | None = None,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Primal-dual iteration for min_u G(u) + H(A u).

        u^{k+1} = prox_{tau G}(u^k - tau A^T p^k)
        v^{k+1} = u^{k+1} + theta (u^{k+1} - u^k)
        p^{k+1} = prox_{sigma H*}(p^k + sigma A v^{k+1})

    Args:
        proxG: Prox of G.
        proxHstar: Prox of the conjugate H*.
        A: Coupling operator.
        cfg: Step sizes; tau sigma ||A||^2 < 1 is required.
        u0: Primal start, zeros by default.
        p0: Dual start, zeros by default.
        objective: Optional primal objective for the trace.
        callback: Called with (k, {"u", "v", "p"}).

    Returns:
        tuple: Primal iterate and the iteration log.

    Raises:
        StepConditionError: If the step sizes violate the condition.
    """
    norm = cfg.operator_norm if cfg.operator_norm is not None else operator_norm(A)
    product = cfg.tau * cfg.sigma * norm**2
    if product >= 1:
        raise StepConditionError(f"tau*sigma*||A||^2 = {product:.6g} must be below 1")

    u = np.zeros(A.cols) if u0 is None else _start(u0)
    p = np.zeros(A.rows) if p0 is None else _start(p0)
    log = IterationLog(solver="chambolle_pock")
    status = None
    for k in range(1, cfg.max_iter + 1):
        u_new = proxG(u - cfg.tau * A.rmatvec(p), cfg.tau)
        v = u_new + cfg.theta * (u_new - u)
        p = proxHstar(p + cfg.sigma * A.matvec(v), cfg.sigma)
        status = _advance(
            log,
            k,
            u,
            u_new,
            cfg.tol,
            objective,
            callback=callback,
            state={"v": v, "p": p},
            objective_every=cfg.objective_every,
        )
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if status is not None:
            break
    return u, _finish(log, status)


# --- Total variation ---


def _image_shape(A_tilde: LinearMap, shape: tuple[int, int] | None) -> tuple[int, int]:
    if shape is None:
        side = int(round(np.sqrt(A_tilde.cols)))
        shape = (side, side)
    if shape[0] * shape[1] != A_tilde.cols:
        raise DimensionMismatchError("image size", A_tilde.cols, shape[0] * shape[1])
    return shape


def _default_start(A_tilde: LinearMap, f: np.ndarray) -> np.ndarray:
    if A_tilde.rows == A_tilde.cols:
        return A_tilde.rmatvec(f)
    return np.zeros(A_tilde.cols)


def tv_reconstruct(
    A_tilde: LinearMap,
    f: np.ndarray,
    alpha: float,
    cfg: SolverConfig | None = None,
    shape: tuple[int, int] | None = None,
    u0: np.ndarray | None = None,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """ROF-type reconstruction min_u 1/2 ||A_tilde u - f||^2 + alpha TV(u) by Chambolle-Pock.

    Uses G = 0, A = [A_tilde; grad] and H(y1, y2) = 1/2 ||y1 - f||^2 + alpha ||y2||_1,
    whose conjugate prox acts blockwise.

    Args:
        A_tilde: Forward operator on flattened images.
        f: Data.
        alpha: TV weight.
        cfg: Solver configuration; built from ||A|| when absent.
        shape: Image shape; square by default.
        u0: Start image, A_tilde^T f for square A_tilde, zeros otherwise.
        callback: Passed to :func:`chambolle_pock`.

    Returns:
        tuple: Reconstructed image (2-D) and the iteration log.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    m, n = _image_shape(A_tilde, shape)
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != A_tilde.rows:
        raise DimensionMismatchError("tv_reconstruct data", A_tilde.rows, f.shape[0])
    K = stack(A_tilde, gradient_operator(m, n))
    split = A_tilde.rows

    def conj_prox(z: np.ndarray, sigma: float) -> np.ndarray:
        return np.concatenate(
            [prox_conj_datafit(z[:split], sigma, f), project_inf_ball(z[split:], alpha)]
        )

    proxHstar = ProxOp(name="tv_conjugate", evaluate=conj_prox)
    if cfg is None:
        cfg = SolverConfig.for_operator(K)

    def objective(u: np.ndarray) -> float:
        return rof_objective(A_tilde, f, alpha, u.reshape(m, n))

    start = _default_start(A_tilde, f) if u0 is None else np.asarray(u0, dtype=float).reshape(-1)
    u, log = chambolle_pock(
        zero_prox(), proxHstar, K, cfg, u0=start, objective=objective, callback=callback
    )
    log.solver = "tv_chambolle_pock"
    return u.reshape(m, n), log


def admm(
    A_tilde: LinearMap,
    f: np.ndarray,
    alpha: float,
    mu: float,
    max_iter: int,
    shape: tuple[int, int] | None = None,
    u0: np.ndarray | None = None,
    tol: float = 0.0,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """ADMM for 1/2 ||A_tilde u - f||^2 + alpha ||v||_1 subject to grad u = v.

    The u-update solves (A_tilde^T A_tilde + mu grad^T grad) u = A_tilde^T f + mu grad^T (v - q)
    by conjugate gradients (tolerance 1e-10, at most 500 steps, warm-started);
    the v-update is shrink(grad u + q, alpha/mu). Records carry the primal
    residual ||grad u - v||.

    Returns:
        tuple: Reconstructed image (2-D) and the iteration log.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    m, n = _image_shape(A_tilde, shape)
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != A_tilde.rows:
        raise DimensionMismatchError("admm data", A_tilde.rows, f.shape[0])

    def grad_flat(x: np.ndarray) -> np.ndarray:
        return grad2d(x.reshape(m, n)).reshape(-1)

    def grad_adjoint(y: np.ndarray) -> np.ndarray:
        return -div2d(y.reshape(2, m, n)).reshape(-1)

    def system(x: np.ndarray) -> np.ndarray:
        return A_tilde.rmatvec(A_tilde.matvec(x)) + mu * grad_adjoint(grad_flat(x))

    C = LinearMap(rows=m * n, cols=m * n, matvec=system, rmatvec=system, name="admm_system")
    ATf = A_tilde.rmatvec(f)

    def objective(u: np.ndarray) -> float:
        return rof_objective(A_tilde, f, alpha, u.reshape(m, n))

    u = _default_start(A_tilde, f) if u0 is None else _start(u0).reshape(-1)
    v = grad_flat(u)
    q = np.zeros_like(v)
    log = IterationLog(solver="admm")
    status = None
    for k in range(1, max_iter + 1):
        rhs = ATf + mu * grad_adjoint(v - q)
        u_new, inner = conjugate_gradient(
            C, rhs, u0=u, max_iter=ADMM_CG_MAX_ITER, tol=ADMM_CG_TOL
        )
        if not inner.converged:
            logger.debug(f"admm: inner CG stopped at residual {inner.residuals()[-1]:.3e}")
        Du = grad_flat(u_new)
        v = shrink(Du + q, alpha / mu)
        q = q + Du - v
        primal = float(np.linalg.norm(Du - v))
        status = _advance(
            log,
            k,
            u,
            u_new,
            tol,
            objective,
            residual=primal,
            callback=callback,
            state={"v": v, "q": q},
        )
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if status is not None:
            break
    return u.reshape(m, n), _finish(log, status)


# --- Plug-and-play ---


def pnp_pgd(
    gradH: Gradient,
    denoiser: Callable[[np.ndarray], np.ndarray],
    u0: np.ndarray,
    tau: float,
    max_iter: int,
    objective: Objective | None = None,
    tol: float = 0.0,
    callback: Callback | None = None,
) -> tuple[np.ndarray, IterationLog]:
    """Plug-and-play PGD u^{k+1} = D(u^k - tau gradH(u^k)).

    Records carry the fixed-point residual ||u^{k+1} - u^k||.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    log = IterationLog(solver="pnp_pgd")
    u = _start(u0)
    status = None
    for k in range(1, max_iter + 1):
        u_new = np.asarray(denoiser(u - tau * gradH(u)), dtype=float)
        fixed_point = float(np.linalg.norm(u_new - u)) if np.all(np.isfinite(u_new)) else None
        status = _advance(
            log, k, u, u_new, tol, objective, residual=fixed_point, callback=callback
        )
        if status == SolverStatus.DIVERGED:
            break
        u = u_new
        if status is not None:
            break
    return u, _finish(log, status)
