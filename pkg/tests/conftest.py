import numpy as np
import pytest

from bbw.knots import KnotHierarchy
from bbw.smooth import SmoothFamily

FIG_KNOTS = [0.0, 0.08, 0.22, 0.41, 0.57, 0.79, 1.0]

_ACCEPTANCE = {}


def cubic_family():
    return SmoothFamily.powers(4)


def trig_family():
    return SmoothFamily.from_descriptors(
        [
            {"kind": "power", "degree": 0},
            {"kind": "power", "degree": 1},
            {"kind": "sin", "freq": 1},
            {"kind": "cos", "freq": 1},
        ]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig_hierarchy():
    return KnotHierarchy.from_coarse(FIG_KNOTS, 1)


@pytest.fixture
def acceptance():
    """Record (criterion, passed, detail) for the summary printed at the end of the run."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
