"""Tests for the first-order solvers."""

import numpy as np
import pytest

from inverselab.harness import sparse_spikes
from inverselab.harness.experiments import deconv_problem
from inverselab.learn import train_averaged_denoiser
from inverselab.linop import (
    DimensionMismatchError,
    from_matrix,
    identity_map,
    operator_norm,
    zero_map,
)
from inverselab.prox import (
    ProxOp,
    l1_prox,
    prox_conj_datafit,
    scaled_squared_norm_prox,
    shrink,
    squared_l2_prox,
    tv_norm,
    zero_prox,
)
from inverselab.solve import (
    IterationLog,
    IterationRecord,
    NotPositiveDefiniteError,
    SolverConfig,
    SolverStatus,
    StepConditionError,
    admm,
    chambolle_pock,
    conjugate_gradient,
    gradient_descent,
    ista,
    least_squares_gradient,
    pnp_pgd,
    proximal_gradient,
    proximal_point,
    tv_reconstruct,
)
from inverselab.spectral import tikhonov_solve_cg


class TestIterationLog:
    """Test the iteration log."""

    def test_indices_must_increase(self):
        """Test records are appended in order."""
        log = IterationLog(solver="test")
        log.append(IterationRecord(k=1, step=1.0))
        with pytest.raises(ValueError):
            log.append(IterationRecord(k=1, step=0.5))

    def test_arrays(self):
        """Test objective and residual arrays use NaN for missing values."""
        log = IterationLog(solver="test")
        log.append(IterationRecord(k=1, objective=2.0, step=1.0))
        log.append(IterationRecord(k=2, residual=0.1, step=0.5))
        assert np.isnan(log.objectives()[1])
        assert np.isnan(log.residuals()[0])
        assert np.array_equal(log.steps(), [1.0, 0.5])
        assert log.iterations == 2
        assert not log.converged


class TestSolverConfig:
    """Test solver configuration."""

    def test_step_condition_validated(self):
        """Test tau * sigma * ||A||^2 >= 1 is rejected."""
        with pytest.raises(ValueError):
            SolverConfig(tau=1.0, sigma=1.0, operator_norm=1.0)

    def test_for_operator(self):
        """Test primal-dual steps are derived from the operator norm."""
        cfg = SolverConfig.for_operator(from_matrix(np.diag([2.0, 1.0])), max_iter=10)
        assert cfg.tau == pytest.approx(0.495, rel=1e-6)
        assert cfg.sigma == cfg.tau
        assert cfg.max_iter == 10


class TestGradientDescent:
    """Test gradient descent."""

    def test_contraction(self):
        """Test u_k = (1 - tau)^k u_0 for 1/2 ||u||^2."""
        u, log = gradient_descent(lambda u: u, np.array([8.0]), 0.5, 3)
        assert u[0] == pytest.approx(1.0)
        assert log.iterations == 3
        assert log.status == SolverStatus.MAX_ITER

    def test_stopping_rule(self):
        """Test a tolerance stops the run early."""
        _, log = gradient_descent(lambda u: u, np.array([1.0]), 0.5, 1000, tol=1e-6)
        assert log.converged
        assert log.iterations < 1000

    def test_callback_receives_copies(self):
        """Test the callback sees every iterate and cannot alias solver state."""
        seen = []

        def callback(k, state):
            seen.append((k, state["u"]))
            state["u"][:] = 99.0

        u, _ = gradient_descent(lambda u: u, np.array([4.0]), 0.5, 2, callback=callback)
        assert [k for k, _ in seen] == [1, 2]
        assert u[0] == pytest.approx(1.0)

    def test_objective_trace_decreases(self, rng):
        """Test descent on a strongly convex quadratic."""
        A = rng.standard_normal((6, 4))
        f = rng.standard_normal(6)
        tau = 1.0 / np.linalg.norm(A, 2) ** 2

        def objective(u):
            return 0.5 * float(np.sum((A @ u - f) ** 2))

        _, log = gradient_descent(
            least_squares_gradient(from_matrix(A), f), np.zeros(4), tau, 50, objective=objective
        )
        assert np.all(np.diff(log.objectives()) <= 1e-12)

    def test_divergence_reported(self):
        """Test an overflowing iterate ends the run and the last finite iterate is returned."""
        with np.errstate(over="ignore", invalid="ignore"):
            u, log = gradient_descent(lambda u: u, np.array([1.0]), 1e200, 10)
        assert log.status == SolverStatus.DIVERGED
        assert np.all(np.isfinite(u))

    def test_non_positive_step(self):
        """Test tau must be positive."""
        with pytest.raises(ValueError):
            gradient_descent(lambda u: u, np.zeros(1), 0.0, 1)

    def test_quartic_oscillates(self):
        """Test J = u^4 from u0 = 1/sqrt(2 tau) bounces between u0 and -u0."""
        tau = 0.1
        u0 = 1.0 / np.sqrt(2.0 * tau)
        seen = []
        _, log = gradient_descent(
            lambda u: 4.0 * u**3, np.array([u0]), tau, 6, callback=lambda k, s: seen.append(s["u"])
        )
        signs = [(-1.0) ** k for k in range(1, 7)]
        assert np.allclose([s[0] for s in seen], np.array(signs) * u0, rtol=1e-9)
        assert log.status == SolverStatus.MAX_ITER


class TestConjugateGradient:
    """Test conjugate gradients."""

    def test_exact_in_n_steps(self, spd_matrix, rng):
        """Test CG solves an n x n SPD system in at most n steps."""
        C = spd_matrix(6)
        b = rng.standard_normal(6)
        u, log = conjugate_gradient(from_matrix(C), b, tol=1e-10)
        assert log.converged
        assert log.iterations <= 6
        assert np.allclose(u, np.linalg.solve(C, b), atol=1e-9)

    def test_residual_recorded(self, spd_matrix, rng):
        """Test each record carries ||b - C u||."""
        C = spd_matrix(5)
        b = rng.standard_normal(5)
        states = []
        conjugate_gradient(
            from_matrix(C), b, max_iter=3, tol=0.0, callback=lambda k, s: states.append(s)
        )
        for state in states:
            assert np.linalg.norm(state["r"]) == pytest.approx(
                np.linalg.norm(b - C @ state["u"]), abs=1e-10
            )

    def test_zero_rhs(self, spd_matrix):
        """Test a zero right-hand side converges without iterating."""
        u, log = conjugate_gradient(from_matrix(spd_matrix(3)), np.zeros(3))
        assert log.converged
        assert log.iterations == 0
        assert np.array_equal(u, np.zeros(3))

    def test_indefinite(self):
        """Test a direction with <p, Cp> <= 0 is reported."""
        with pytest.raises(NotPositiveDefiniteError):
            conjugate_gradient(from_matrix(np.diag([1.0, -1.0])), np.ones(2))

    def test_rhs_length(self):
        """Test the right-hand side must match the operator."""
        with pytest.raises(DimensionMismatchError):
            conjugate_gradient(identity_map(3), np.ones(2))

    def test_consecutive_residuals_orthogonal(self, spd_matrix, rng):
        """Test <r^{k+1}, r^k> vanishes relative to the residual norms."""
        C = spd_matrix(8)
        b = rng.standard_normal(8)
        residuals = [b.copy()]
        conjugate_gradient(
            from_matrix(C), b, max_iter=5, tol=0.0, callback=lambda k, s: residuals.append(s["r"])
        )
        assert len(residuals) == 6
        for r_old, r_new in zip(residuals, residuals[1:], strict=False):
            scale = np.linalg.norm(r_old) * np.linalg.norm(r_new)
            assert abs(float(r_old @ r_new)) <= 1e-8 * scale


class TestProximalMethods:
    """Test proximal point, proximal gradient and ISTA."""

    def test_proximal_point_converges_to_center(self):
        """Test the proximal point method on 1/2 ||u - f||^2."""
        f = np.array([1.0, -2.0])
        u, log = proximal_point(squared_l2_prox(f), np.zeros(2), 1.0, 60)
        assert np.allclose(u, f, atol=1e-12)
        assert np.all(np.diff(log.objectives()) <= 1e-15)

    def test_ista_scalar(self):
        """Test the scalar lasso 1/2 (u - 3)^2 + |u| has minimizer 2."""
        u, log = ista(from_matrix(np.array([[1.0]])), np.array([3.0]), 1.0, 1.0, max_iter=10)
        assert u[0] == pytest.approx(2.0)
        assert log.converged
        assert log.solver == "ista"

    def test_ista_matches_proximal_gradient(self, rng):
        """Test ISTA is proximal gradient with the l1 prox."""
        A = from_matrix(rng.standard_normal((8, 5)))
        f = rng.standard_normal(8)
        tau = 1.0 / operator_norm(A) ** 2
        u_ista, _ = ista(A, f, 0.2, tau, max_iter=30)
        u_pg, _ = proximal_gradient(
            least_squares_gradient(A, f), l1_prox(0.2), np.zeros(5), tau, 30
        )
        assert np.array_equal(u_ista, u_pg)

    def test_ista_objective_decreases(self, rng):
        """Test the lasso objective is non-increasing for tau = 1 / ||A||^2."""
        A = from_matrix(rng.standard_normal((10, 6)))
        tau = 1.0 / operator_norm(A, iters=500) ** 2
        _, log = ista(A, rng.standard_normal(10), 0.1, 0.99 * tau, max_iter=100)
        assert np.all(np.diff(log.objectives()) <= 1e-12)

    def test_ista_sparse_recovery(self):
        """Test ISTA on an identity operator equals one shrinkage step."""
        f = np.array([2.0, 0.1, -0.5])
        u, _ = ista(identity_map(3), f, 0.3, 1.0, max_iter=5)
        assert np.allclose(u, shrink(f, 0.3))

    def test_proximal_gradient_without_nonsmooth_part_is_gradient_descent(self, rng):
        """Test G = 0 turns proximal gradient into gradient descent."""
        A = from_matrix(rng.standard_normal((7, 4)))
        f = rng.standard_normal(7)
        gradH = least_squares_gradient(A, f)
        u0 = rng.standard_normal(4)
        u_pg, _ = proximal_gradient(gradH, zero_prox(), u0, 0.05, 40)
        u_gd, _ = gradient_descent(gradH, u0, 0.05, 40)
        assert np.allclose(u_pg, u_gd, rtol=0.0, atol=1e-14)

    def test_proximal_gradient_without_smooth_part_is_proximal_point(self, rng):
        """Test gradH = 0 turns proximal gradient into the proximal point method."""
        u0 = rng.standard_normal(5)
        u_pg, _ = proximal_gradient(np.zeros_like, l1_prox(0.3), u0, 0.7, 10)
        u_pp, _ = proximal_point(l1_prox(0.3), u0, 0.7, 10)
        assert np.array_equal(u_pg, u_pp)


class TestPrimalDual:
    """Test Chambolle-Pock and the TV solvers."""

    def test_step_condition_checked(self):
        """Test steps violating the condition for the actual norm are refused."""
        A = from_matrix(2.0 * np.eye(3))
        proxG = squared_l2_prox(np.zeros(3))
        with pytest.raises(StepConditionError):
            chambolle_pock(proxG, l1_prox(1.0), A, SolverConfig(tau=1.0, sigma=1.0))

    def test_tv_of_tiny_image_is_constant_mean(self):
        """Test strong TV weight flattens a 2x2 image to its mean."""
        f = np.array([0.0, 1.0, 0.5, 0.2])
        cfg = SolverConfig(tau=0.3, sigma=0.3, operator_norm=3.0, max_iter=5000)
        u, _ = tv_reconstruct(identity_map(4), f, 2.0, cfg)
        assert np.allclose(u, f.mean(), atol=1e-3)

    def test_tv_zero_weight_returns_data(self, rng):
        """Test alpha = 0 reproduces the data for denoising."""
        f = rng.uniform(size=16)
        u, _ = tv_reconstruct(identity_map(16), f, 0.0)
        assert np.allclose(u.reshape(-1), f, atol=1e-6)

    def test_admm_and_chambolle_pock_agree(self, rng):
        """Test both TV solvers reach the same objective on a small denoising problem."""
        clean = np.zeros((8, 8))
        clean[2:6, 2:6] = 1.0
        f = (clean + 0.1 * rng.standard_normal((8, 8))).reshape(-1)
        A = identity_map(64)
        cfg = SolverConfig(tau=0.33, sigma=0.33, operator_norm=3.0, max_iter=3000)
        u_cp, log_cp = tv_reconstruct(A, f, 0.1, cfg)
        u_admm, log_admm = admm(A, f, 0.1, 1.0, 300)
        obj_cp = log_cp.objectives()[-1]
        obj_admm = log_admm.objectives()[-1]
        assert obj_cp == pytest.approx(obj_admm, rel=1e-3)
        assert np.max(np.abs(u_cp - u_admm)) < 5e-2
        assert log_admm.residuals()[-1] < log_admm.residuals()[0]

    def test_tv_reduces_total_variation(self, rng):
        """Test the reconstruction is flatter than the noisy data."""
        f = rng.uniform(size=(6, 6))
        u, _ = tv_reconstruct(identity_map(36), f.reshape(-1), 0.2)
        assert tv_norm(u) < tv_norm(f)

    def test_shape_checked(self):
        """Test a shape that does not match the operator is rejected."""
        with pytest.raises(DimensionMismatchError):
            tv_reconstruct(identity_map(6), np.ones(6), 0.1, shape=(2, 2))

    def test_zero_coupling_is_proximal_point(self, rng):
        """Test A = 0 reduces the primal updates to proximal point steps on G."""
        proxG = squared_l2_prox(rng.standard_normal(4))
        u0 = rng.standard_normal(4)
        cfg = SolverConfig(tau=0.4, sigma=0.4, operator_norm=0.0, max_iter=15)
        u_cp, _ = chambolle_pock(proxG, l1_prox(1.0), zero_map(3, 4), cfg, u0=u0)
        u_pp, _ = proximal_point(proxG, u0, 0.4, 15)
        assert np.allclose(u_cp, u_pp, rtol=0.0, atol=1e-14)

    def test_tikhonov_matches_conjugate_gradients(self, rng):
        """Test G = alpha/2 ||u||^2 and H = 1/2 ||. - f||^2 give the Tikhonov solution."""
        M = rng.standard_normal((10, 10))
        f = rng.standard_normal(10)
        norm = float(np.linalg.norm(M, 2))
        proxHstar = ProxOp(
            name="datafit_conjugate", evaluate=lambda z, s: prox_conj_datafit(z, s, f)
        )
        cfg = SolverConfig(tau=0.99 / norm, sigma=0.99 / norm, operator_norm=norm, max_iter=20000)
        u_cp, _ = chambolle_pock(scaled_squared_norm_prox(1.0), proxHstar, from_matrix(M), cfg)
        u_cg, _ = tikhonov_solve_cg(from_matrix(M), f, 1.0)
        assert np.allclose(u_cp, u_cg, rtol=0.0, atol=1e-6)

    def test_admm_zero_weight_returns_data(self, rng):
        """Test alpha = 0 makes ADMM reproduce the data."""
        f = rng.uniform(size=16)
        u, _ = admm(identity_map(16), f, 0.0, 1.0, 20)
        assert np.allclose(u.reshape(-1), f, atol=1e-8)


class TestPlugAndPlay:
    """Test plug-and-play proximal gradient."""

    def test_prox_denoiser_equals_proximal_gradient(self, rng):
        """Test PnP with a prox as denoiser reproduces proximal gradient."""
        A = from_matrix(rng.standard_normal((6, 4)))
        f = rng.standard_normal(6)
        tau = 1.0 / operator_norm(A) ** 2
        gradH = least_squares_gradient(A, f)
        u_pnp, _ = pnp_pgd(gradH, lambda v: shrink(v, 0.05), np.zeros(4), tau, 20)
        u_pg, _ = proximal_gradient(gradH, l1_prox(0.05 / tau), np.zeros(4), tau, 20)
        assert np.allclose(u_pnp, u_pg)

    def test_fixed_point_residual_non_increasing(self, rng):
        """Test the residual of an averaged iteration never grows."""
        A = from_matrix(rng.standard_normal((8, 5)))
        f = rng.standard_normal(8)
        tau = 1.0 / operator_norm(A, iters=500) ** 2
        _, log = pnp_pgd(
            least_squares_gradient(A, f), lambda v: shrink(v, 0.1), np.zeros(5), tau, 50
        )
        residuals = log.residuals()
        assert np.all(np.diff(residuals) <= 1e-10)

    def test_trained_denoiser_on_deconvolution(self):
        """Test PnP with a trained averaged denoiser has a non-increasing residual."""
        clean = np.array([sparse_spikes(16, 3, seed) for seed in range(60)])
        D = train_averaged_denoiser(clean, 0.05, hidden=16, tau=0.05, epochs=20, seed=3)
        A, _, f = deconv_problem(4, 3, 1.0, 0.01, seed=5)
        tau = 1.0 / operator_norm(A, iters=500) ** 2
        _, log = pnp_pgd(least_squares_gradient(A, f), D, np.zeros(16), tau, 60)
        residuals = log.residuals()
        assert np.all(np.isfinite(residuals))
        assert np.all(np.diff(residuals[5:]) <= 1e-10)
