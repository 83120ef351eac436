import pytest

from quantding.geometry import MetricPotential, make_grid
from quantding.polynomial import parse_expr


@pytest.fixture(scope="session")
def grid():
    return make_grid()


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(24, 48)


@pytest.fixture(scope="session")
def bumped():
    return MetricPotential(parse_expr("0.3*x3"))


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if not test_acceptance.SUMMARY:
        return
    terminalreporter.section("acceptance criteria")
    for line, details in sorted(test_acceptance.SUMMARY, key=lambda s: int(s[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
        for d in details:
            terminalreporter.write_line(d)
