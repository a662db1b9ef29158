import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("felab", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("felab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_simplex(rng, shape, axis=-1):
    x = rng.gamma(1.0, size=shape)
    return x / x.sum(axis=axis, keepdims=True)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
