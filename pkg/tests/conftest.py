import numpy as np
import pytest

from polybubble.config import ProblemConfig, default_coefficients
from polybubble.quadrature import constants_table


@pytest.fixture(scope="session")
def cfg71():
    """N=7, m=1, beta=6, k=1 with equal coefficients summing to -1."""
    return ProblemConfig(7, 1, 1, 6.0, default_coefficients(7))


@pytest.fixture(scope="session")
def consts71(cfg71):
    return constants_table(cfg71)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
