from __future__ import annotations

import numpy as np
import pytest

from hclab.grid import LogGrid
from hclab.params import make_params
from hclab.riesz import RieszOperator
from hclab.solver import minimize


@pytest.fixture(scope="session")
def grid():
    return LogGrid.symmetric(12.0, 2048, 3)


@pytest.fixture(scope="session")
def p0():
    return make_params(3, 2.0, 0.0)


@pytest.fixture(scope="session")
def p16():
    return make_params(3, 2.0, 0.16)


@pytest.fixture(scope="session")
def op(p0, grid):
    return RieszOperator(p0, grid)


@pytest.fixture(scope="session")
def sol16(p16, op):
    """Converged theta = 0.16 minimizer (N=3, alpha=2, default grid)."""
    return minimize(p16, op)


@pytest.fixture(scope="session")
def sol0(p0, op):
    return minimize(p0, op)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
