"""Tests for linear maps, SVD and conditioning diagnostics."""

import numpy as np
import pytest

from inverselab.linop import (
    DimensionMismatchError,
    SvdFactorization,
    adjoint_apply,
    adjoint_mismatch,
    apply,
    compose,
    condition_numbers,
    dense_matrix,
    from_matrix,
    identity_map,
    normal_operator,
    operator_norm,
    scale,
    stack,
    svd,
    zero_map,
)


class TestApplication:
    """Test forward and adjoint application."""

    def test_identity(self):
        """Test the identity returns its input."""
        x = np.array([1.0, -2.0, 3.5])
        assert np.array_equal(apply(identity_map(3), x), x)
        assert np.array_equal(adjoint_apply(identity_map(3), x), x)

    def test_zero_map(self):
        """Test the zero map returns zeros of the right length."""
        op = zero_map(4, 2)
        assert np.array_equal(apply(op, np.ones(2)), np.zeros(4))
        assert np.array_equal(adjoint_apply(op, np.ones(4)), np.zeros(2))

    def test_dense_matrix_action(self):
        """Test a 2x2 matrix and its transpose."""
        op = from_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.allclose(apply(op, np.array([1.0, 1.0])), [3.0, 7.0])
        assert np.allclose(adjoint_apply(op, np.array([1.0, 0.0])), [1.0, 2.0])

    def test_wrong_length_rejected(self):
        """Test dimension mismatches raise with the expected and actual lengths."""
        op = from_matrix(np.ones((3, 2)))
        with pytest.raises(DimensionMismatchError) as exc:
            apply(op, np.ones(3))
        assert exc.value.expected == 2
        assert exc.value.actual == 3
        with pytest.raises(DimensionMismatchError):
            adjoint_apply(op, np.ones(2))

    def test_from_matrix_rejects_vectors(self):
        """Test a 1-D array is not accepted as a matrix."""
        with pytest.raises(ValueError):
            from_matrix(np.ones(3))

    def test_adjoint_mismatch_of_matrix(self, rng):
        """Test a dense operator satisfies the adjoint identity."""
        op = from_matrix(rng.standard_normal((6, 4)))
        assert adjoint_mismatch(op, rng.standard_normal(4), rng.standard_normal(6)) < 1e-12


class TestCombinators:
    """Test operator composition helpers."""

    def test_compose_matches_product(self, rng):
        """Test compose agrees with the matrix product."""
        A = rng.standard_normal((3, 4))
        B = rng.standard_normal((4, 5))
        op = compose(from_matrix(A), from_matrix(B))
        assert op.shape == (3, 5)
        assert np.allclose(dense_matrix(op), A @ B)
        y = rng.standard_normal(3)
        assert np.allclose(adjoint_apply(op, y), B.T @ (A.T @ y))

    def test_compose_rejects_mismatch(self):
        """Test composing incompatible operators fails."""
        with pytest.raises(DimensionMismatchError):
            compose(from_matrix(np.ones((2, 3))), from_matrix(np.ones((2, 2))))

    def test_stack(self, rng):
        """Test the stacked operator and its adjoint."""
        A = rng.standard_normal((2, 3))
        B = rng.standard_normal((4, 3))
        op = stack(from_matrix(A), from_matrix(B))
        assert op.shape == (6, 3)
        assert np.allclose(dense_matrix(op), np.vstack([A, B]))
        y = rng.standard_normal(6)
        assert np.allclose(adjoint_apply(op, y), A.T @ y[:2] + B.T @ y[2:])

    def test_scale(self):
        """Test scaling multiplies both actions."""
        op = scale(from_matrix(np.array([[1.0, 2.0]])), 3.0)
        assert np.allclose(apply(op, np.array([1.0, 1.0])), [9.0])
        assert np.allclose(adjoint_apply(op, np.array([1.0])), [3.0, 6.0])

    def test_normal_operator(self, rng):
        """Test the normal operator equals A^T A + alpha I."""
        A = rng.standard_normal((5, 3))
        op = normal_operator(from_matrix(A), alpha=0.5)
        assert np.allclose(dense_matrix(op), A.T @ A + 0.5 * np.eye(3))


class TestSvd:
    """Test the Jacobi singular value decomposition."""

    def test_diagonal_with_zero(self):
        """Test diag(3, 2, 0) keeps the two positive singular values."""
        factor = svd(np.diag([3.0, 2.0, 0.0]))
        assert factor.rank == 2
        assert np.allclose(factor.singular_values, [3.0, 2.0])

    def test_matches_reference_singular_values(self, rng):
        """Test a random 5x3 matrix against numpy's singular values."""
        A = rng.standard_normal((5, 3))
        factor = svd(A)
        assert np.allclose(factor.singular_values, np.linalg.svd(A, compute_uv=False))

    def test_wide_matrix(self, rng):
        """Test a matrix with more columns than rows."""
        A = rng.standard_normal((3, 7))
        factor = svd(A)
        assert factor.left_vectors.shape == (3, 3)
        assert factor.right_vectors.shape == (7, 3)
        assert np.allclose(factor.reconstruct(), A)

    def test_singular_triples(self, rng):
        """Test A u_i = s_i v_i and A^T v_i = s_i u_i."""
        A = rng.standard_normal((6, 4))
        f = svd(A)
        V, U, s = f.left_vectors, f.right_vectors, f.singular_values
        assert np.allclose(A @ U, V * s)
        assert np.allclose(A.T @ V, U * s)

    def test_orthonormal_vectors(self, rng):
        """Test both vector sets are orthonormal."""
        f = svd(rng.standard_normal((8, 5)))
        assert np.allclose(f.left_vectors.T @ f.left_vectors, np.eye(5), atol=1e-10)
        assert np.allclose(f.right_vectors.T @ f.right_vectors, np.eye(5), atol=1e-10)

    def test_reconstruction_64(self, rng):
        """Test a random 64x64 matrix is reconstructed to high accuracy."""
        A = rng.standard_normal((64, 64))
        f = svd(A)
        assert np.max(np.abs(f.reconstruct() - A)) < 1e-8

    def test_values_non_increasing(self, rng):
        """Test singular values are sorted."""
        f = svd(rng.standard_normal((10, 6)))
        assert np.all(np.diff(f.singular_values) <= 0)

    def test_zero_matrix_has_rank_zero(self):
        """Test the zero matrix yields an empty factorization."""
        f = svd(np.zeros((3, 2)))
        assert f.rank == 0
        assert f.left_vectors.shape == (3, 0)

    def test_rank_deficient(self, rng):
        """Test a rank-2 product is recognised as rank 2."""
        A = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        f = svd(A)
        assert f.rank == 2
        assert np.allclose(f.reconstruct(), A)

    def test_rejects_non_finite(self):
        """Test NaN entries are rejected."""
        with pytest.raises(ValueError):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_factorization_validates_shapes(self):
        """Test inconsistent vector shapes are rejected."""
        with pytest.raises(ValueError):
            SvdFactorization(
                left_vectors=np.eye(2),
                right_vectors=np.eye(3),
                singular_values=np.array([1.0, 1.0]),
                rows=2,
                cols=2,
            )


class TestDiagnostics:
    """Test operator norms and condition numbers."""

    def test_operator_norm_diagonal(self):
        """Test the norm of diag(3, 2) is 3."""
        assert operator_norm(from_matrix(np.diag([3.0, 2.0]))) == pytest.approx(3.0, rel=1e-9)

    def test_operator_norm_zero(self):
        """Test the norm of the zero map is 0."""
        assert operator_norm(zero_map(3, 3)) == 0.0

    def test_operator_norm_matches_svd(self, rng):
        """Test power iteration agrees with the largest singular value."""
        A = rng.standard_normal((7, 5))
        expected = np.linalg.svd(A, compute_uv=False)[0]
        assert operator_norm(from_matrix(A), iters=500) == pytest.approx(expected, rel=1e-6)

    def test_condition_numbers(self):
        """Test diag(2, 1) with unit variance ratio."""
        cond_mle, cond_map = condition_numbers(np.diag([2.0, 1.0]), ratio=1.0)
        assert cond_mle == pytest.approx(4.0)
        assert cond_map == pytest.approx(2.5)

    def test_singular_matrix_is_infinitely_ill_conditioned(self):
        """Test a singular matrix has infinite condition number without a shift."""
        cond_mle, cond_map = condition_numbers(np.diag([1.0, 0.0]), ratio=0.5)
        assert cond_mle == np.inf
        assert cond_map == pytest.approx(1.5 / 0.5)

    def test_shift_improves_conditioning(self, rng):
        """Test a positive ratio never worsens the condition number."""
        A = rng.standard_normal((6, 4))
        cond_mle, cond_map = condition_numbers(A, ratio=0.1)
        assert cond_map <= cond_mle

    def test_invalid_inputs(self):
        """Test negative ratios and the zero matrix are rejected."""
        with pytest.raises(ValueError):
            condition_numbers(np.eye(2), ratio=-1.0)
        with pytest.raises(ValueError):
            condition_numbers(np.zeros((2, 2)))
