"""Per-criterion verdict table for the acceptance suite.

Acceptance tests call record_criterion() with their measured outcome;
the terminal summary prints one line per criterion so a red run still
shows exactly which numbered claims held.  A test that errors before
reaching its verdict is recorded as FAIL from the report hook.
"""

import pytest

_ACCEPTANCE = {}


def record_criterion(num: int, title: str, passed: bool,
                     detail: str = "") -> None:
    _ACCEPTANCE[num] = {"title": title, "passed": passed, "detail": detail}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call" or not item.name.startswith("test_criterion_"):
        return
    num = int(item.name.split("_")[2])
    if num not in _ACCEPTANCE:
        title = (item.function.__doc__ or item.name).strip().splitlines()[0]
        record_criterion(num, title, rep.passed,
                         "" if rep.passed else "errored before verdict")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[num]
        verdict = "PASS" if entry["passed"] else "FAIL"
        line = f"criterion {num:2d} [{verdict}] {entry['title']}"
        if entry["detail"]:
            line += f" -- {entry['detail']}"
        terminalreporter.write_line(line)
