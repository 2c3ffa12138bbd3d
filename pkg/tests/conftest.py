import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: full-tolerance acceptance criteria (slow, minutes to tens of minutes)"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
