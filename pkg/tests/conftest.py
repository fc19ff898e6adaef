import numpy as np
import pytest

from slowmo.classical import find_period1_fixed_point
from slowmo.core import Params, PhasePoint


@pytest.fixture(scope="session")
def params():
    return Params()


@pytest.fixture(scope="session")
def static_params():
    return Params(epsilon=0.0)


@pytest.fixture(scope="session")
def side_fixed_point(params):
    return find_period1_fixed_point(PhasePoint(0.0, 1.0), params)


@pytest.fixture(scope="session")
def modified_025(params):
    from slowmo.moyal import find_modified_resonance

    return find_modified_resonance(PhasePoint(0.0, 1.0), params, kbar=0.25, xi=1.0)


@pytest.fixture(params=["numba", "numpy"])
def each_backend(request):
    from slowmo import kernels

    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
