import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from weakot import make_power_cost

settings.register_profile(
    "suite", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture
def quad():
    return make_power_cost(2)


@pytest.fixture
def quartic_cost():
    return make_power_cost(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
