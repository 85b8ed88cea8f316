from __future__ import annotations

import os

import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and os.path.basename(str(item.fspath)) == "test_acceptance.py":
        _ACCEPTANCE[item.name] = "PASS" if rep.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in sorted(_ACCEPTANCE.items(), key=lambda kv: int(kv[0].split("_")[1][1:])):
        terminalreporter.write_line(f"{status}  {name}")
