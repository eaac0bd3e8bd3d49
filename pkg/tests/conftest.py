"""Acceptance reporting: one PASS/FAIL/SKIP line per criterion at the end of the run."""

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion, title): numbered acceptance criterion")
    config.stash[_RESULTS] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    results = item.config.stash[_RESULTS]
    key = (str(marker.args[0]), marker.args[1])
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            status = "SKIP (" + reason.removeprefix("Skipped: ") + ")"
        else:
            status = "PASS" if report.passed else "FAIL"
        prior = results.get(key)
        # a criterion split over several tests fails if any part fails
        if prior is None or prior == "PASS" or status == "FAIL":
            results[key] = status if prior != "FAIL" else prior


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_RESULTS]
    if not results:
        return

    def order(key):
        num = key[0].split("-")[0]
        return (int(num) if num.isdigit() else 99, key[0])

    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=order):
        terminalreporter.write_line(f"criterion {key[0]:>12}  {results[key]:<6}  {key[1]}")
