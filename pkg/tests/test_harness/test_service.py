"""Tests for synthetic signals, noise and metrics."""

import numpy as np
import pytest

from inverselab.harness import NoiseMode, add_noise, metrics, sparse_spikes, support_size


class TestSparseSpikes:
    """Test spike trains."""

    def test_count_and_magnitudes(self):
        """Test exactly k nonzeros with magnitudes in [0.5, 1.5]."""
        u = sparse_spikes(100, 7, seed=3)
        nonzero = u[u != 0]
        assert nonzero.shape == (7,)
        assert np.all(np.abs(nonzero) >= 0.5)
        assert np.all(np.abs(nonzero) <= 1.5)

    def test_seeded(self):
        """Test the seed fixes the draw."""
        assert np.array_equal(sparse_spikes(50, 5, 1), sparse_spikes(50, 5, 1))
        assert not np.array_equal(sparse_spikes(50, 5, 1), sparse_spikes(50, 5, 2))

    def test_limits(self):
        """Test k = 0 and k = n are allowed and k > n is not."""
        assert not np.any(sparse_spikes(4, 0, 1))
        assert np.all(sparse_spikes(4, 4, 1) != 0)
        with pytest.raises(ValueError):
            sparse_spikes(4, 5, 1)


class TestAddNoise:
    """Test noise models."""

    def test_zero_level_copies(self):
        """Test delta = 0 returns an independent copy."""
        f = np.array([1.0, 2.0])
        g = add_noise(f, 0.0, 1)
        assert np.array_equal(f, g)
        g[0] = 5.0
        assert f[0] == 1.0

    def test_scaled_to_norm(self):
        """Test the noise norm equals delta exactly."""
        f = np.zeros(30)
        g = add_noise(f, 0.25, 4, NoiseMode.SCALED_TO_NORM)
        assert np.linalg.norm(g - f) == pytest.approx(0.25, rel=1e-12)

    def test_gaussian_sigma_seeded(self):
        """Test Gaussian noise is reproducible and roughly of level delta."""
        f = np.zeros(4000)
        a = add_noise(f, 0.1, 9)
        assert np.array_equal(a, add_noise(f, 0.1, 9))
        assert np.std(a) == pytest.approx(0.1, rel=0.1)

    def test_negative_level(self):
        """Test negative delta is rejected."""
        with pytest.raises(ValueError):
            add_noise(np.zeros(2), -1.0, 1)


class TestMetrics:
    """Test error metrics."""

    def test_identical(self):
        """Test zero error has infinite PSNR."""
        u = np.array([0.2, 0.4])
        assert metrics(u, u) == (0.0, 0.0, float("inf"))

    def test_values(self):
        """Test l2, max error and PSNR of a unit offset."""
        l2, linf, psnr = metrics(np.ones(2), np.zeros(2))
        assert l2 == pytest.approx(np.sqrt(2.0))
        assert linf == 1.0
        assert psnr == pytest.approx(0.0)
        assert metrics(np.full(2, 0.1), np.zeros(2))[2] == pytest.approx(20.0)

    def test_shape_mismatch(self):
        """Test shapes must agree."""
        with pytest.raises(ValueError):
            metrics(np.zeros(3), np.zeros(4))


class TestSupportSize:
    """Test support counting."""

    def test_threshold(self):
        """Test entries at or below the threshold do not count."""
        assert support_size(np.array([0.0, 1e-3, -2e-3, 0.5])) == 2
        assert support_size(np.array([0.1, 0.2]), threshold=0.15) == 1
