import numpy as np
import pytest

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    prev = _CRITERIA.get(crit, "PASS")
    _CRITERIA[crit] = "PASS" if prev == "PASS" and report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA, key=lambda c: int(c.split()[0].lstrip("AC").rstrip(":"))):
        terminalreporter.write_line(f"[{_CRITERIA[crit]}] {crit}")


@pytest.fixture
def criterion(record_property):
    def tag(name):
        record_property("criterion", name)
    return tag


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
