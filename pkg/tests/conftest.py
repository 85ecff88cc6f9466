"""Collects ``@pytest.mark.criterion(n, "title")`` outcomes into one line per criterion."""

from collections import defaultdict

import pytest

_results: dict[int, dict] = defaultdict(lambda: {"title": "", "passed": 0, "failed": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry = _results[mark.args[0]]
        entry["title"] = mark.args[1]
        if report.passed:
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        r = _results[n]
        status = "FAIL" if r["failed"] else "PASS"
        detail = f"passed {r['passed']}"
        if r["failed"]:
            detail += f", failed: {', '.join(r['failed'])}"
        terminalreporter.write_line(f"[{status}] criterion {n}: {r['title']} ({detail})")
