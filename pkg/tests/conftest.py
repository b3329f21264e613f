import pytest

from liebrane.lie_core import build_root_system, build_su

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def su2():
    return build_su(2)


@pytest.fixture(scope="session")
def su3():
    return build_su(3)


@pytest.fixture(scope="session")
def su4():
    return build_su(4)


@pytest.fixture(scope="session")
def rs3(su3):
    return build_root_system(su3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
