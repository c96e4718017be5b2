import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    key = (marker.args[0], marker.args[1])
    ok = report.passed if report.when == "call" else False
    _RESULTS.setdefault(key, []).append((item.name, ok))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), runs in sorted(_RESULTS.items()):
        status = "PASS" if all(ok for _, ok in runs) else "FAIL"
        names = ", ".join(name for name, _ in runs)
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({names})")
