import numpy as np
import pytest

from chexpand.fixtures import load_fixtures
from chexpand.potential import DoubleWell

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def well():
    return DoubleWell()


@pytest.fixture(scope="session")
def oracle():
    return load_fixtures()["values"]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
