import numpy as np
import pytest

from prodgap import specfun
from prodgap.params import ModelParams


@pytest.fixture(scope="session", autouse=True)
def warm_backend():
    """Trigger JIT compilation once so timed tests measure math, not numba."""
    p = ModelParams((0.0,))
    specfun.f_theta_many(p, [0.5], 2)
    specfun.g_theta_many(p, [0.5], 2)
    specfun.g_theta_many(ModelParams((1.0, 2.0)), [0.5], 3)
    yield


@pytest.fixture(scope="session")
def standard_params():
    """The parameter sets exercised throughout the acceptance checks."""
    return [
        ModelParams((0.0,)),
        ModelParams((2.0,)),
        ModelParams((1.0, 2.0)),
        ModelParams((0.0, 1.0)),
        ModelParams((1.0, 2.0, 3.0)),
    ]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250810)
