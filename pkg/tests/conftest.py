"""Shared pytest wiring: replay the acceptance scorecard after the run.

The acceptance tests each record one ``ACCEPTANCE n: PASS|FAIL`` line; output
capture would hide the lines for passing tests, so they are replayed here in a
dedicated terminal section.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "SCORECARD", None) if module else None
    if lines:
        terminalreporter.section("acceptance scorecard")
        for line in lines:
            terminalreporter.line(line)
