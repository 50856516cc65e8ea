import pytest

_criterion_lines = []


@pytest.fixture
def criterion():
    """Reporter for the acceptance suite: one printed PASS/FAIL line per
    numbered criterion, echoed again after the run summary (pytest
    captures in-test prints for passing tests)."""

    def report(num: int, ok: bool, detail: str):
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _criterion_lines.append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)
