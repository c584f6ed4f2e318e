import pytest

from zenolink.tdse import load_scenario, run_scenario


@pytest.fixture(scope="session")
def bundled():
    """Results of the two bundled scenarios, computed once per session."""
    return {name: run_scenario(load_scenario(name)) for name in ("fig3a", "fig3b")}


@pytest.fixture(scope="session")
def refined():
    """The bundled scenarios rerun with dx and dt halved."""
    return {name: run_scenario(load_scenario(name).refined()) for name in ("fig3a", "fig3b")}


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
