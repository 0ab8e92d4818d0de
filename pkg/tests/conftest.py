import pytest

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: report(criterion, passed, detail)."""
    def _add(criterion, passed, detail=""):
        _ACCEPTANCE.append((str(criterion), bool(passed), detail))
    return _add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
