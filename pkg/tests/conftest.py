"""Shared test plumbing: the acceptance summary section.

Acceptance tests append one "[PASS]/[FAIL] criterion N: ..." line each via
the criterion_lines fixture; the lines are echoed in a dedicated terminal
section so the verdicts are visible without -s.
"""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
