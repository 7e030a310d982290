import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a one-line verdict; all of them are echoed at the end of the run."""

    def record(line: str) -> None:
        print(line)
        _VERDICTS.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
