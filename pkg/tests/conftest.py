import numpy as np
import pytest

from axialrough import OpticalConfig, SourceDistribution


@pytest.fixture
def unit_optics():
    return OpticalConfig(rayleigh_range=1.0)


@pytest.fixture
def pair_005():
    return SourceDistribution.symmetric_pair(0.05)


def random_centered(rng, n_max=6, extent=0.1):
    """Random distribution with theta_1 = 0 and |z_i| <= extent."""
    n = int(rng.integers(2, n_max + 1))
    p = rng.dirichlet(np.ones(n))
    z = rng.uniform(-1, 1, n)
    z = z - p @ z
    z *= extent / np.abs(z).max()
    return SourceDistribution(tuple(z), tuple(p / p.sum()))
