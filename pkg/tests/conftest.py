import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cavityphoton import DrivePulse, RateSet  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def vstirap_rates():
    """gamma = 1, kappa_in = 1, g = 10 (C_in = 50), kappa_ex at its optimum sqrt(101)."""
    return RateSet(g=10.0, kappa_in=1.0, kappa_ex=math.sqrt(101), gamma=1.0)


@pytest.fixture
def slow_ramp():
    return DrivePulse("sin2_ramp", omega_max=10.0, duration=100.0)


def record_acceptance(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
