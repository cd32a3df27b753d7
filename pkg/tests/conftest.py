import pytest

_LINES = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def emit(number, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {text}"
        _LINES[number] = line
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES):
        terminalreporter.write_line(_LINES[key])
