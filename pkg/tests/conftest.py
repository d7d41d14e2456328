"""Shared test configuration.

The acceptance tests register one verdict per numbered criterion; a
summary block with one PASS/FAIL line per criterion is printed at the end
of the session so the verdicts survive output capturing.
"""

from _criteria import CRITERIA


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, message = CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        tr.write_line(f"CRITERION {number:2d}: {verdict} — {message}")
