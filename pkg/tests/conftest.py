"""Test session configuration.

Collects the outcome of every acceptance test (tests named
``test_criterion_*``) and prints one PASS/FAIL line per criterion in a
dedicated terminal section at the end of the run.
"""

from __future__ import annotations

_CRITERIA: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call":
        _CRITERIA[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        # setup error/skip means the criterion body never ran
        _CRITERIA[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        outcome = _CRITERIA[name]
        word = {"passed": "PASS", "failed": "FAIL"}.get(outcome,
                                                        outcome.upper())
        terminalreporter.write_line(f"{word}  {name}")
