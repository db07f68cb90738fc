import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: criterion-level checks, some take minutes")


@pytest.fixture(scope="session")
def rng_factory():
    def make(seed):
        return np.random.default_rng(seed)
    return make
