import numpy as np
import pytest

from parabolic_model.harness.scenario import n3_fixture, scalar_fixture
from parabolic_model.transforms import CharFunEvaluator


@pytest.fixture(scope="session")
def n3_built():
    return n3_fixture().build()


@pytest.fixture(scope="session")
def scalar_built():
    return scalar_fixture().build()


@pytest.fixture(scope="session")
def n3_eval(n3_built):
    b = n3_built
    return CharFunEvaluator(b.system, b.constants.kappa, b.constants, b.domain)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
