import numpy as np
import pytest

from spis import Exponential, FullOrthant, Gamma, IidProduct, LinearMap, Normal

TRIVARIATE_B = 0.5 * np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]])
TRIVARIATE_X0 = np.array([1.4, 1.5, 1.4])


def trivariate_model():
    return LinearMap(IidProduct([Exponential(1.0)] * 3), TRIVARIATE_B)


def correlated_normal(r=0.5):
    L = np.array([[1.0, 0.0], [r, np.sqrt(1 - r * r)]])
    return LinearMap(IidProduct([Normal(), Normal()]), L)


@pytest.fixture
def trivariate_tail():
    return trivariate_model(), FullOrthant(TRIVARIATE_X0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
