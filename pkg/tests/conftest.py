import math

import pytest

from npdisks.geometry import Geometry


@pytest.fixture(scope="session")
def g45():
    return Geometry(1.0, math.pi / 4)


@pytest.fixture(scope="session")
def g60():
    return Geometry(1.0, math.pi / 3)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
