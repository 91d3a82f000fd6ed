import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def sample_in(D, rng, scale=0.8, tries=1000):
    """Random interior point, drawn from a scaled gaussian cloud."""
    d = D.dimension
    for _ in range(tries):
        raw = rng.normal(size=2 * d) * scale
        z = raw[:d] + 1j * raw[d:]
        if D.contains(z):
            return z
    raise RuntimeError("could not sample an interior point")
