import numpy as np
import pytest

from pinvset.dataset import linear2d, nonlinear2d


@pytest.fixture(scope="session")
def lin_oracle():
    return linear2d()


@pytest.fixture(scope="session")
def nonlin_oracle():
    return nonlinear2d()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
