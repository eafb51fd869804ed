"""Shared pytest plumbing: acceptance-criterion reporting.

test_acceptance.py records one (criterion, outcome) pair per criterion;
the terminal-summary hook prints them as PASS/FAIL lines at the end of the
run regardless of output capturing.
"""

_acceptance_results: list[tuple[str, bool]] = []


def record_acceptance(name: str, passed: bool) -> None:
    _acceptance_results.append((name, passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok in _acceptance_results:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")
