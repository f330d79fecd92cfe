import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def random_categorical(rng, size):
    """Strictly positive random probability vector."""
    from specsim.dist import Categorical

    raw = rng.random(size) + 1e-3
    return Categorical(raw / raw.sum())
