import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a one-line PASS/FAIL verdict; all lines are printed at the end of the run."""

    def record(number: int, name: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"criterion {number} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        print(_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
