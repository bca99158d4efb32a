import warnings

import numpy as np
import pytest

from nlscontrol.grid import State, make_grid
from nlscontrol.model import ModelParams, TheoremRangeWarning, validate_model


@pytest.fixture
def grid():
    return make_grid(1, 256, 10.0)


@pytest.fixture
def gaussian(grid):
    return State(grid, np.exp(-grid.x**2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def model(lam, sigma, dim=1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TheoremRangeWarning)
        return validate_model(ModelParams(lam, sigma, dim))


def random_state(g, rng):
    return State(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
