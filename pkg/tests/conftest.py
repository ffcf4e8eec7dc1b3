import numpy as np
import pytest

from zakbench.fields import physical_field
from zakbench.grid import Grid

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid16():
    return Grid(16, 16.0)


@pytest.fixture
def grid8():
    return Grid(8, 8.0)


def random_field(grid, rng, zero_mean=False, real=False):
    vals = rng.standard_normal(grid.shape)
    if not real:
        vals = vals + 1j * rng.standard_normal(grid.shape)
    vals = vals.astype(np.complex128)
    if zero_mean:
        vals -= vals.mean()
    return physical_field(grid, vals)


@pytest.fixture
def random_field_factory(rng):
    def make(grid, zero_mean=False, real=False):
        return random_field(grid, rng, zero_mean=zero_mean, real=real)

    return make
