import pytest

from atomlaser.params import preset, reduce

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rb87():
    return preset("rb87")


@pytest.fixture
def li7():
    return preset("li7")


@pytest.fixture
def rb87_reduced():
    return reduce(preset("rb87"))


@pytest.fixture
def li7_reduced():
    return reduce(preset("li7"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
