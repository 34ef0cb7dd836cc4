import re

CRITERION = re.compile(r"test_acceptance\.py::test_(a\d+)_")
_outcomes: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    m = CRITERION.search(report.nodeid)
    if m and (report.when == "call" or report.outcome != "passed"):
        _outcomes.setdefault(m.group(1).upper(), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_outcomes, key=lambda s: int(s[1:])):
        ok = all(o == "passed" for o in _outcomes[name])
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}")
