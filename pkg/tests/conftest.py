import math
import sys

import pytest

from sucaloc import ArrayConfig, OfdmConfig
from sucaloc.localizer import GridSpec


@pytest.fixture
def small_array():
    return ArrayConfig(1.0, math.pi / 3, 16)


@pytest.fixture
def small_ofdm():
    return OfdmConfig(3.5e9, 8, 480e3)


@pytest.fixture
def small_grid():
    return GridSpec(40, 30, 2.0, 12.0)


@pytest.fixture
def desk_array():
    return ArrayConfig(1.0, math.pi / 3, 49)


@pytest.fixture
def desk_ofdm():
    return OfdmConfig(3.5e9, 200, 480e3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    RESULTS = getattr(mod, "RESULTS", None)
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[num])
