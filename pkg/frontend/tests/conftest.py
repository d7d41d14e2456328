from _plot_criteria import CRITERIA


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria (plots)")
    for number in sorted(CRITERIA):
        passed, message = CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        tr.write_line(f"CRITERION {number:2d}: {verdict} — {message}")
