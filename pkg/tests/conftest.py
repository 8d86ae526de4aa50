import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nclab.core import ThetaData
from nclab.lp import build_partition
from nclab.symbol import Grid

settings.register_profile(
    "nclab",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("nclab")


@pytest.fixture(scope="session")
def theta():
    return ThetaData(1.0)


@pytest.fixture(scope="session")
def grid(theta):
    return Grid(8.0, 64, theta)


@pytest.fixture(scope="session")
def part(grid):
    return build_partition(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hermite_functions(n, x):
    """Normalised Hermite functions ``psi_0..psi_{n-1}`` by the stable three-term recurrence."""
    psi = np.zeros((n, x.size))
    psi[0] = np.pi ** -0.25 * np.exp(-x * x / 2.0)
    if n > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for k in range(2, n):
        psi[k] = np.sqrt(2.0 / k) * x * psi[k - 1] - np.sqrt((k - 1) / k) * psi[k - 2]
    return psi
