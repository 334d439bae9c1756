"""Shared pytest configuration: the acceptance-criteria summary block."""

from __future__ import annotations

import acceptance_report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_report.armed:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria", sep="=")
    for num in sorted(acceptance_report.CRITERIA):
        name = acceptance_report.CRITERIA[num]
        if num in acceptance_report.results:
            passed, detail = acceptance_report.results[num]
        else:
            passed, detail = False, "not evaluated (test errored or was deselected)"
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:02d} [{status}] {name}: {detail}")
