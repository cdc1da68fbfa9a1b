"""Shared pytest wiring: per-criterion pass/fail summary lines."""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    num = int(match.group(1))
    label = match.group(2).replace("_", " ")
    if report.failed:
        _results[num] = ("FAIL", label)
        return
    if _results.get(num, ("", ""))[0] == "FAIL":
        return
    if report.skipped:
        _results[num] = ("SKIP", label)
    elif report.when == "call" and report.passed:
        _results[num] = ("PASS", label)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        outcome, label = _results[num]
        terminalreporter.write_line(f"criterion {num}: {outcome} - {label}")
