"""Shared pytest configuration.

Tests in ``test_acceptance.py`` carry ``@pytest.mark.criterion(n, title)``;
a criterion passes when all of its tests pass.  A one-line verdict per
criterion is printed at the end of the session.
"""

import collections

import pytest

_results = collections.OrderedDict()   # n -> {"title": str, "failed": [...], "ran": int}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n, title = mark.args
            _results.setdefault(n, {"title": title, "failed": [], "ran": 0})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    entry = _results[mark.args[0]]
    if report.when == "call":
        entry["ran"] += 1
    if report.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        entry = _results[n]
        if entry["failed"]:
            verdict = "FAIL"
            detail = " (failed: " + ", ".join(entry["failed"]) + ")"
        elif entry["ran"]:
            verdict, detail = "PASS", ""
        else:
            verdict, detail = "FAIL", " (not run)"
        terminalreporter.write_line(f"{verdict} criterion {n}: {entry['title']}{detail}")
