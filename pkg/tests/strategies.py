"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
angles = st.floats(min_value=0.0, max_value=2 * np.pi, allow_nan=False)
unit_phases = angles.map(lambda t: complex(np.exp(1j * t)))
orders = st.integers(min_value=2, max_value=6)


def rng_from(seed):
    return np.random.default_rng(seed)
