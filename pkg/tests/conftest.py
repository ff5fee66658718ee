import pytest

_LINES = []


@pytest.fixture(scope="session")
def criterion_report():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    def report(c):
        print(c.line())
        _LINES.append(c.line())
    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
