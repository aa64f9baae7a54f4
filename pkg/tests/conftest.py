import sys
from pathlib import Path

import pytest

from d2dcache import RateModel, SystemParams, build_popularity, reference_params
from d2dcache.params import MBIT

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def refcell():
    return reference_params()


@pytest.fixture
def ref_pop(refcell):
    return build_popularity(refcell)


@pytest.fixture
def slow_params():
    return reference_params(beta=0.5, rate_d2d=50 * MBIT, rate_cell=15 * MBIT, rate_backhaul=10 * MBIT)


@pytest.fixture
def slow_rates():
    return RateModel.fixed(15 * MBIT, 10 * MBIT)


@pytest.fixture
def small():
    """Three clusters over eight files with reference-cell rates."""
    return SystemParams(K=3, F=8, m0=6, N=2, lam=0.5, beta=0.8)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
