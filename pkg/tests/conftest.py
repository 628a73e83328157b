import numpy as np
import pytest
from hypothesis import settings

from tensor_game.codes import make_reed_solomon
from tensor_game.strategies import honest_strategy
from tensor_game.tensor import tensor_encode

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def rs5():
    """[5, 2, 4] Reed-Solomon code over GF(5)."""
    return make_reed_solomon(5, 5, 1)


@pytest.fixture(scope="session")
def rs3():
    """[3, 2, 2] Reed-Solomon code over GF(3)."""
    return make_reed_solomon(3, 3, 1)


@pytest.fixture(scope="session")
def planted(rs5):
    return tensor_encode(rs5, 2, [[1, 2], [3, 4]])


@pytest.fixture(scope="session")
def honest5(planted):
    return honest_strategy(planted)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
