from __future__ import annotations

import pytest

from ftl_theta.flux_model import affine
from ftl_theta.initial_data import parse_steps


@pytest.fixture
def lwr():
    """v = 1/2 - rho on [0, 1]."""
    return affine(0.5, 1.0, 1.0)


@pytest.fixture
def rarefaction_data():
    return parse_steps("steps:-1:0.8,0:0.4,1")


@pytest.fixture
def shock_data():
    return parse_steps("steps:-1:0.4,0:0.8,1")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import summary_lines
    except ImportError:
        return
    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
