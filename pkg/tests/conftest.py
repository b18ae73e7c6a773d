import numpy as np
import pytest

from fraclangevin import standard_model
from fraclangevin.fields import Field


@pytest.fixture(scope="session")
def pair():
    """d=1, alpha=1.5, U=x^2/2, Phi=log_radial(1.5)."""
    return standard_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


def gaussian_field(d=1):
    def f(v):
        return np.exp(-np.sum(np.asarray(v) ** 2, axis=-1))

    def g(v):
        v = np.asarray(v)
        return -2 * v * f(v)[..., None]

    return Field(f, grad=g, decay=None, features=(np.zeros(d),))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
