"""Seeded random number generation.

All stochastic routines draw from Philox-4x64 (10 rounds), a counter-based
64-bit generator. Its round multipliers are 0xD2E7470EE14C6C93 and
0xCA5A826395121157 and its key increments 0x9E3779B97F4A7C15 and
0xBB67AE8584CAA73B, so a stream is fully determined by the integer seed.
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Create a generator for the given seed.

    Args:
        seed: Non-negative integer seed.

    Returns:
        np.random.Generator: Philox-backed generator.
    """
    return np.random.Generator(np.random.Philox(seed))
