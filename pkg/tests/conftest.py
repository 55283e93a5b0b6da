"""Collects one PASS/FAIL line per acceptance criterion and prints them at the
end of the run. Tests opt in with ``@pytest.mark.criterion(n, title)`` and
attach their measured numbers through the ``detail`` fixture."""

import pytest

_LINES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def detail(request):
    def note(text):
        request.node.user_properties.append(("detail", text))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    number, title = mark.args
    notes = "; ".join(v for k, v in item.user_properties if k == "detail")
    if report.failed:
        message = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else "error"
        notes = f"{notes}; {message}" if notes else message
    status = "PASS" if report.passed else "FAIL"
    _LINES[number] = f"[{status}] criterion {number:>2}: {title} | {notes}"


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
