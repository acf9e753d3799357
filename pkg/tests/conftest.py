import numpy as np
import pytest

from lrcq.code import builtin_code, parity_check_matrix


@pytest.fixture(scope="session")
def fixture_code():
    return builtin_code("fixture")


@pytest.fixture(scope="session")
def wimax():
    return builtin_code("wimax576")


@pytest.fixture(scope="session")
def array_code():
    return builtin_code("array582")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fixture_H(fixture_code):
    return parity_check_matrix(fixture_code)
