"""Shared test plumbing: end-of-run acceptance verdict report."""

import pytest

_CRITERION_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """One pass/fail line per acceptance criterion, echoed immediately and
    replayed in the terminal summary (which survives output capture)."""

    def _verdict(tag: str, ok: bool, detail: str = "") -> bool:
        line = f"[{tag}] {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        _CRITERION_VERDICTS.append(line)
        return ok

    return _verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_VERDICTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _CRITERION_VERDICTS:
            terminalreporter.write_line(line)
