import pytest

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store one pass/fail line per acceptance criterion for the summary."""
    lines = request.config.stash.setdefault(_LINES, {})

    def put(number, ok, detail):
        lines[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"

    return put


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
