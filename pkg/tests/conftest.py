import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    ok = report.passed if report.when == "call" else not report.failed
    prev = _verdicts.get(crit, True)
    _verdicts[crit] = prev and ok


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (n, title), ok in sorted(_verdicts.items()):
        tr.write_line(f"criterion {n:>2} [PRIMARY] {title}: {'PASS' if ok else 'FAIL'}")
