"""Tests for generalized inverses, spectral filters and the discrepancy principle."""

import numpy as np
import pytest

from inverselab.linop import DimensionMismatchError, from_matrix, identity_map, svd, zero_map
from inverselab.solve import SolverConfig
from inverselab.spectral import (
    FilterKind,
    FilterLengthError,
    NoFeasibleAlphaError,
    SingularSystemError,
    SpectralFilter,
    SpectralStatistics,
    StatisticsError,
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


def _tikhonov_closed_form(A, f, alpha):
    return np.linalg.solve(A.T @ A + alpha * np.eye(A.shape[1]), A.T @ f)


class TestSpectralFilter:
    """Test filter construction and coefficients."""

    def test_coefficients(self):
        """Test each family on fixed singular values."""
        s = np.array([2.0, 1.0, 0.1])
        assert np.allclose(SpectralFilter.pseudo_inverse().coefficients(s), [0.5, 1.0, 10.0])
        assert np.allclose(
            SpectralFilter.tikhonov(1.0).coefficients(s), [2.0 / 5.0, 0.5, 0.1 / 1.01]
        )
        assert np.allclose(SpectralFilter.tsvd(0.5).coefficients(s), [0.5, 1.0, 0.0])

    def test_learned_per_index(self):
        """Test learned coefficients are used as given, even for equal singular values."""
        filt = SpectralFilter.learned([0.3, 0.7])
        assert filt.kind == FilterKind.LEARNED
        assert np.array_equal(filt.coefficients(np.array([1.0, 1.0])), [0.3, 0.7])
        assert filt.coefficient(1.0, 1) == 0.7

    def test_learned_length_mismatch(self):
        """Test a learned filter of the wrong length is rejected."""
        with pytest.raises(FilterLengthError) as exc:
            SpectralFilter.learned([1.0]).coefficients(np.array([1.0, 0.5]))
        assert exc.value.expected == 2
        assert exc.value.actual == 1

    def test_missing_parameters(self):
        """Test parametrized families require their parameter."""
        with pytest.raises(ValueError):
            SpectralFilter(kind=FilterKind.TIKHONOV)
        with pytest.raises(ValueError):
            SpectralFilter(kind=FilterKind.TSVD)
        with pytest.raises(ValueError):
            SpectralFilter.learned([np.nan])


class TestGeneralizedInverse:
    """Test the pseudo-inverse and filtered reconstructions."""

    def test_pseudo_inverse_of_invertible_matrix(self, rng):
        """Test A^+ f solves A u = f for invertible A."""
        A = rng.standard_normal((5, 5)) + 5 * np.eye(5)
        f = rng.standard_normal(5)
        assert np.allclose(pseudo_inverse_apply(svd(A), f), np.linalg.solve(A, f))

    def test_pseudo_inverse_matrix_matches_numpy(self, rng):
        """Test the dense pseudo-inverse of a rank-deficient matrix."""
        A = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 4))
        assert np.allclose(pseudo_inverse_matrix(svd(A)), np.linalg.pinv(A), atol=1e-10)

    def test_moore_penrose_identities(self, rng):
        """Test the computed pseudo-inverse satisfies all four identities."""
        A = rng.standard_normal((7, 4))
        report = moore_penrose_check(A, pseudo_inverse_matrix(svd(A)))
        assert report.passed
        assert report.max_deviation < 1e-9

    def test_moore_penrose_rejects_transpose(self, rng):
        """Test A^T is generally not the pseudo-inverse."""
        A = rng.standard_normal((5, 3))
        assert not moore_penrose_check(A, A.T).passed

    def test_moore_penrose_shape(self):
        """Test a candidate of the wrong shape is rejected."""
        with pytest.raises(DimensionMismatchError):
            moore_penrose_check(np.ones((3, 2)), np.ones((3, 2)))

    def test_tikhonov_filter_matches_normal_equations(self, rng):
        """Test the Tikhonov filter equals (A^T A + alpha I)^{-1} A^T f."""
        A = rng.standard_normal((8, 5))
        f = rng.standard_normal(8)
        u = filter_apply(svd(A), SpectralFilter.tikhonov(0.3), f)
        assert np.allclose(u, _tikhonov_closed_form(A, f, 0.3))

    @pytest.mark.parametrize("alpha", [1e-4, 1e-2, 1.0])
    def test_tikhonov_operator_norm_bound(self, alpha, rng):
        """Test ||K_alpha f|| <= ||f|| / (2 sqrt(alpha)), attained at sigma = sqrt(alpha)."""
        for _ in range(20):
            factor = svd(rng.standard_normal((7, 5)))
            f = rng.standard_normal(7)
            u = filter_apply(factor, SpectralFilter.tikhonov(alpha), f)
            assert np.linalg.norm(u) <= np.linalg.norm(f) / (2.0 * np.sqrt(alpha)) * (1 + 1e-12)
        A = np.diag([np.sqrt(alpha), 1.0])
        u = filter_apply(svd(A), SpectralFilter.tikhonov(alpha), np.array([1.0, 0.0]))
        assert np.linalg.norm(u) == pytest.approx(1.0 / (2.0 * np.sqrt(alpha)))

    def test_data_length_checked(self, rng):
        """Test the data vector must live in the data space."""
        with pytest.raises(DimensionMismatchError):
            filter_apply(svd(rng.standard_normal((4, 3))), SpectralFilter.pseudo_inverse(), [1.0])

    def test_picard_table(self, rng):
        """Test ratios and partial sums of the Picard table."""
        A = rng.standard_normal((6, 4))
        f = rng.standard_normal(6)
        factor = svd(A)
        table = picard_diagnostic(factor, f)
        assert [entry.index for entry in table] == [0, 1, 2, 3]
        for entry in table:
            assert entry.ratio == pytest.approx(entry.coefficient / entry.sigma)
        partial = [entry.partial_sum for entry in table]
        assert all(b >= a for a, b in zip(partial, partial[1:], strict=False))
        assert partial[-1] == pytest.approx(np.sum(pseudo_inverse_apply(factor, f) ** 2))


class TestTikhonovSolvers:
    """Test the iterative Tikhonov solvers."""

    def test_cg_matches_closed_form(self, rng):
        """Test CG on the normal equations."""
        A = rng.standard_normal((10, 6))
        f = rng.standard_normal(10)
        u, log = tikhonov_solve_cg(from_matrix(A), f, 0.1)
        assert log.solver == "tikhonov_cg"
        assert log.converged
        assert np.allclose(u, _tikhonov_closed_form(A, f, 0.1), atol=1e-8)

    def test_cg_respects_config(self, rng):
        """Test a solver config caps the iterations."""
        A = rng.standard_normal((10, 6))
        _, log = tikhonov_solve_cg(
            from_matrix(A), rng.standard_normal(10), 0.1, SolverConfig(max_iter=2, tol=1e-14)
        )
        assert log.iterations == 2

    def test_cg_rejects_bad_alpha(self):
        """Test alpha must be positive."""
        with pytest.raises(ValueError):
            tikhonov_solve_cg(identity_map(2), np.ones(2), 0.0)

    def test_gradient_descent_converges(self, rng):
        """Test gradient descent approaches the Tikhonov solution."""
        A = rng.standard_normal((8, 5))
        f = rng.standard_normal(8)
        u, log = tikhonov_solve_gd(from_matrix(A), f, 0.5, max_iter=3000)
        assert log.solver == "tikhonov_gd"
        assert np.allclose(u, _tikhonov_closed_form(A, f, 0.5), atol=1e-8)
        objectives = log.objectives()
        assert np.all(np.diff(objectives) <= 1e-12)


class TestClosedFormEstimators:
    """Test the eigenvalue shift and the Gaussian MAP estimate."""

    def test_shifted_inverse(self):
        """Test (A + alpha I)^{-1} f on a diagonal matrix."""
        out = shifted_inverse(np.diag([1.0, 3.0]), np.array([2.0, 4.0]), 1.0)
        assert np.allclose(out, [1.0, 1.0])

    def test_shifted_inverse_singular(self):
        """Test a shift that cancels an eigenvalue is reported."""
        with pytest.raises(SingularSystemError):
            shifted_inverse(np.diag([-1.0, 1.0]), np.ones(2), 1.0)

    def test_shifted_inverse_needs_square(self):
        """Test rectangular matrices are rejected."""
        with pytest.raises(ValueError):
            shifted_inverse(np.ones((2, 3)), np.ones(2), 1.0)

    def test_map_with_prior_mean(self):
        """Test the MAP estimate for A = I blends data and prior mean."""
        out = map_gaussian_closed_form(np.eye(2), np.array([2.0, 0.0]), 1.0, np.array([0.0, 4.0]))
        assert np.allclose(out, [1.0, 2.0])

    def test_maximum_likelihood(self, rng):
        """Test ratio = 0 gives the least-squares solution."""
        A = rng.standard_normal((6, 3))
        f = rng.standard_normal(6)
        expected = np.linalg.lstsq(A, f, rcond=None)[0]
        assert np.allclose(map_gaussian_closed_form(A, f, 0.0), expected)

    def test_maximum_likelihood_singular(self):
        """Test ratio = 0 on a rank-deficient matrix fails."""
        with pytest.raises(SingularSystemError):
            map_gaussian_closed_form(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2), 0.0)

    def test_negative_ratio(self):
        """Test a negative variance ratio is rejected."""
        with pytest.raises(ValueError):
            map_gaussian_closed_form(np.eye(2), np.ones(2), -1.0)


class TestDataDrivenFilters:
    """Test MSE-optimal filters and their risk."""

    def test_optimal_coefficients(self):
        """Test theta_i = sigma_i / (sigma_i^2 + Delta_i / Pi_i)."""
        factor = svd(np.diag([2.0, 1.0, 0.5]))
        stats = SpectralStatistics(delta=np.array([1.0, 1.0, 1.0]), pi=np.array([1.0, 2.0, 0.0]))
        theta = mse_optimal_filter(factor, stats).coefficients(factor.singular_values)
        assert np.allclose(theta, [2.0 / 5.0, 1.0 / 1.5, 0.0])

    def test_optimal_filter_minimizes_risk(self, rng):
        """Test no Tikhonov filter has lower expected risk than the optimal one."""
        factor = svd(rng.standard_normal((6, 4)))
        stats = SpectralStatistics(delta=rng.uniform(0.01, 0.1, 4), pi=rng.uniform(0.5, 2.0, 4))
        best = expected_filter_risk(factor, mse_optimal_filter(factor, stats), stats)
        for alpha in (1e-3, 1e-2, 1e-1, 1.0):
            assert expected_filter_risk(factor, SpectralFilter.tikhonov(alpha), stats) >= best

    def test_risk_of_pseudo_inverse(self):
        """Test the pseudo-inverse risk is the amplified noise alone."""
        factor = svd(np.diag([2.0, 0.5]))
        stats = SpectralStatistics(delta=np.array([0.4, 0.4]), pi=np.array([1.0, 1.0]))
        risk = expected_filter_risk(factor, SpectralFilter.pseudo_inverse(), stats)
        assert risk == pytest.approx(0.4 / 4.0 + 0.4 / 0.25)

    def test_statistics_must_match_rank(self):
        """Test a mode count mismatch is rejected."""
        stats = SpectralStatistics(delta=np.ones(3), pi=np.ones(3))
        with pytest.raises(StatisticsError):
            mse_optimal_filter(svd(np.eye(2)), stats)

    def test_statistics_validation(self):
        """Test negative energies are rejected."""
        with pytest.raises(ValueError):
            SpectralStatistics(delta=np.array([-1.0]), pi=np.array([1.0]))


class TestMorozov:
    """Test the discrepancy principle on denoising, where it has a closed form."""

    @staticmethod
    def _denoise(f):
        return lambda alpha: f / (1.0 + alpha)

    def test_selects_largest_feasible_alpha(self):
        """Test alpha solves alpha / (1 + alpha) ||f|| = delta."""
        f = np.ones(10)
        delta = 0.5
        result = morozov_select_alpha(self._denoise(f), identity_map(10), f, delta)
        expected = delta / (np.linalg.norm(f) - delta)
        assert result.alpha == pytest.approx(expected, rel=1e-6)
        assert result.discrepancy <= result.target
        assert result.next_discrepancy > result.target
        assert result.next_alpha > result.alpha
        assert result.monotone

    def test_safety_factor(self):
        """Test mu scales the target."""
        f = np.ones(10)
        result = morozov_select_alpha(self._denoise(f), identity_map(10), f, 0.25, mu=2.0)
        assert result.target == pytest.approx(0.5)
        assert result.alpha == pytest.approx(0.5 / (np.linalg.norm(f) - 0.5), rel=1e-6)

    def test_upper_bound_feasible(self):
        """Test a noise level above ||f|| returns alpha_max."""
        f = np.ones(4)
        result = morozov_select_alpha(self._denoise(f), identity_map(4), f, 10.0)
        assert result.alpha == pytest.approx(1e4)
        assert result.next_alpha is None

    def test_no_feasible_alpha(self):
        """Test an operator that cannot fit the data raises."""
        f = np.ones(3)
        with pytest.raises(NoFeasibleAlphaError) as exc:
            morozov_select_alpha(lambda alpha: np.zeros(3), zero_map(3, 3), f, 0.1)
        assert exc.value.target == pytest.approx(0.1)

    def test_invalid_parameters(self):
        """Test delta and mu are validated."""
        f = np.ones(2)
        with pytest.raises(ValueError):
            morozov_select_alpha(self._denoise(f), identity_map(2), f, 0.0)
        with pytest.raises(ValueError):
            morozov_select_alpha(self._denoise(f), identity_map(2), f, 0.1, mu=0.5)
