"""Suite-wide plumbing: acceptance-criterion reporting and the time budget.

Tests marked `criterion("...")` get one PASS/FAIL line each in a summary
section at the end of the run. The test marked `suite_budget` is moved to the
end of the collection so it observes the wall clock of everything before it.
"""

import time

import pytest

_results = []


def pytest_configure(config):
    config._suite_start = time.perf_counter()
    config.addinivalue_line(
        "markers", "criterion(name): shipped guarantee checked by this test"
    )
    config.addinivalue_line(
        "markers", "suite_budget: runs last; asserts the whole run met its time budget"
    )
    _results.clear()


def pytest_collection_modifyitems(config, items):
    tail = [item for item in items if item.get_closest_marker("suite_budget")]
    for item in tail:
        items.remove(item)
        items.append(item)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        marker = item.get_closest_marker("criterion")
        if marker:
            _results.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
