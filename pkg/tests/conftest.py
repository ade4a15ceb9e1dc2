"""Pytest configuration and fixtures."""

import os

# Quiet, reproducible settings before importing the package
os.environ["INVERSELAB_LOG_LEVEL"] = "WARNING"
os.environ["INVERSELAB_DEFAULT_SEED"] = "1"

import numpy as np
import pytest

from inverselab.config import get_settings
from inverselab.rng import make_rng


@pytest.fixture(autouse=True)
def _fresh_settings():
    """Drop cached settings so environment changes inside a test take effect."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator shared by a single test."""
    return make_rng(20240601)


@pytest.fixture
def spd_matrix(rng: np.random.Generator):
    """Factory for symmetric positive definite matrices with a given eigenvalue range."""

    def make(n: int, lo: float = 1.0, hi: float = 10.0) -> np.ndarray:
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        return (Q * rng.uniform(lo, hi, size=n)) @ Q.T

    return make


@pytest.fixture
def out_dir(tmp_path):
    """Empty output directory for experiment runs."""
    path = tmp_path / "out"
    path.mkdir()
    return path
