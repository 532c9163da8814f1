import sys

import pytest

from odequiv.invariants import Ode2


@pytest.fixture
def eq_x():
    """y'' + y'/x + 4x y = 0 on [0.4, 2.8]."""
    return Ode2.from_strings("1/x", "4*x", "x", (0.4, 2.8))


@pytest.fixture
def eq_t():
    """y'' + 4 exp(-3t) y = 0 on [-1, 0.9]."""
    return Ode2.from_strings("0", "4*exp(-3*t)", "t", (-1.0, 0.9))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
