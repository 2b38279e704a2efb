import pytest

ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one ``CRITERION k: PASS|FAIL`` line for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail):
        lines.append((number, f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
