import pytest

VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(VERDICTS, [])

    def record(criterion: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
