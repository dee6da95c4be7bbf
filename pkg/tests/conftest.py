import sys

import pytest

from planar_antenna.emission import ObjectiveGeometry
from planar_antenna.stack import three_layer_stack

@pytest.fixture(scope="session")
def stack350():
    return three_layer_stack(350.0, 200.0)


@pytest.fixture(scope="session")
def stack600():
    return three_layer_stack(600.0, 200.0)


@pytest.fixture(scope="session")
def objective():
    return ObjectiveGeometry(1.65, 1.78)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
