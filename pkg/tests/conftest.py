import numpy as np
import pytest

from staranc import StationaryDistribution


def random_pi(rng, c, floor=0.02):
    """Dirichlet draw with a frequency floor, renormalised."""
    p = rng.dirichlet(np.ones(c))
    p = np.maximum(p, floor)
    p = p / p.sum()
    return StationaryDistribution(tuple(p))


@pytest.fixture
def table_pi():
    """The running four-state example with a dominant fourth state."""
    return StationaryDistribution((0.1, 0.1, 0.2, 0.6))


@pytest.fixture
def uniform4():
    return StationaryDistribution((0.25, 0.25, 0.25, 0.25))
