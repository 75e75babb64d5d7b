import pytest

from kirchhoff.ground_state import closed_form_1d, find_ground_state


@pytest.fixture(scope="session")
def gs1():
    return find_ground_state(1, 3.0)


@pytest.fixture(scope="session")
def gs1_exact():
    return closed_form_1d(3.0)


@pytest.fixture(scope="session")
def gs3():
    return find_ground_state(3, 3.0)


@pytest.fixture(scope="session")
def gs4():
    return find_ground_state(4, 3.0)


@pytest.fixture(scope="session")
def gs5():
    return find_ground_state(5, 2.5)


@pytest.fixture(scope="session")
def gs6():
    return find_ground_state(6, 2.25)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
