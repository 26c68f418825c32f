import numpy as np
import pytest

from aitrand.core.config import get_settings


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running checks (deselect with -m 'not slow')")


@pytest.fixture(autouse=True)
def fresh_settings():
    # settings are cached per process; tests that set AITRAND_* need a reload
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)
