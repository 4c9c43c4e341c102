"""Suite-wide pytest configuration.

Adds a terminal summary that prints one PASS/FAIL line per acceptance
criterion whenever tests from test_acceptance.py ran, so the gate's
status can be read off the bottom of any pytest invocation.
"""

from __future__ import annotations

import re

_ACCEPTANCE_RESULTS: dict[int, str] = {}
_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    num = int(match.group(1))
    if report.when == "call":
        _ACCEPTANCE_RESULTS[num] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _ACCEPTANCE_RESULTS[num] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[num]
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[ACCEPTANCE] criterion {num:02d}: {word}")
