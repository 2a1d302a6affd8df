import pytest
from hypothesis import settings

from belcal import library

settings.register_profile("belcal", deadline=None, derandomize=True, max_examples=100)
settings.load_profile("belcal")


@pytest.fixture(scope="session")
def robot():
    return library.theory("robot1d")


@pytest.fixture(scope="session")
def noisy():
    return library.theory("noisy")


@pytest.fixture(scope="session")
def sensewall():
    return library.theory("sensewall")


@pytest.fixture(scope="session")
def window():
    return library.theory("window")


@pytest.fixture(scope="session")
def window_win():
    return library.theory("window_win")


# the acceptance module stores its row lines here so they survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
