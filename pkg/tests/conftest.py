"""Per-criterion PASS/FAIL summary for tests marked ``@pytest.mark.criterion(n, title)``."""

import pytest

_results: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    entry = _results.setdefault(number, {"title": title, "tests": {}})
    ok = report.passed and entry["tests"].get(item.name, True)
    entry["tests"][item.name] = ok


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        verdict = "PASS" if all(entry["tests"].values()) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {entry['title']}")
        for name, ok in entry["tests"].items():
            terminalreporter.write_line(f"    {'pass' if ok else 'FAIL'}  {name}")
