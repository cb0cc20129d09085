import numpy as np
import pytest
from hypothesis import settings

from netrecon.core import MarginalVector, WeightedNetwork

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

X3 = np.array([[0.0, 2.0, 1.0], [0.0, 0.0, 3.0], [4.0, 0.0, 0.0]])


@pytest.fixture
def x3():
    return WeightedNetwork(X3)


@pytest.fixture
def m3():
    return MarginalVector(np.array([3.0, 3.0, 4.0]), np.array([4.0, 2.0, 4.0]))


@pytest.fixture
def m2():
    return MarginalVector(np.array([3.0, 5.0]), np.array([5.0, 3.0]))


def random_network(rng, n, density=0.7, scale=10.0):
    x = rng.exponential(scale, (n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(x, 0.0)
    return WeightedNetwork(x)
