"""Shared, expensive fixtures computed once per session."""

import numpy as np
import pytest

from randhorizon.american_put import PutModel, carr_price
from randhorizon.bounds import symmetric_quadratic_payoff
from randhorizon.uvm import UvmModel, iterate_scheme, uvm_grid


@pytest.fixture(scope="session")
def quad_payoff():
    return symmetric_quadratic_payoff()


@pytest.fixture(scope="session")
def uvm_run_50(quad_payoff):
    """Quadratic payoff, sigma in [0.1, 0.3], T = 1, n = 50."""
    model = UvmModel(0.1, 0.3, 1.0, 50)
    stages = iterate_scheme(quad_payoff, model)
    start = quad_payoff.on_grid(uvm_grid(quad_payoff, model))
    return model, start, stages


@pytest.fixture(scope="session")
def uvm_run_200(quad_payoff):
    model = UvmModel(0.1, 0.3, 1.0, 200)
    return model, iterate_scheme(quad_payoff, model)


@pytest.fixture(scope="session")
def put_run_10():
    """Randomized put, K = 100, r = 0.05, sigma = 0.2, T = 0.5, n = 10, spot 100."""
    model = PutModel(100.0, 0.05, 0.2, 0.5, 10)
    value, stages = carr_price(model, 100.0)
    return model, value, stages


def node_values(stage_fn):
    return np.asarray(stage_fn.values)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
