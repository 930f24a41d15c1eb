import pytest

from surfheat.geometry import sphere, torus
from surfheat.mesh import build_icosphere

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def unit_sphere():
    return sphere()


@pytest.fixture(scope="session")
def torus_surface():
    return torus()


@pytest.fixture(scope="session")
def ico(unit_sphere):
    return {k: build_icosphere(k, unit_sphere) for k in range(5)}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
