"""Shared fixtures and the one-line-per-criterion acceptance summary."""

import re

import pytest

_DETAILS: dict[str, str] = {}
_OUTCOMES: dict[str, str] = {}
_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")


@pytest.fixture
def report_detail(request):
    """Attach a one-line measurement to the running acceptance test."""

    def record(text: str):
        _DETAILS[request.node.nodeid] = text
        print(text)

    return record


def pytest_runtest_logreport(report):
    if not _CRITERION.search(report.nodeid):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    rows = []
    for nodeid, outcome in _OUTCOMES.items():
        m = _CRITERION.search(nodeid)
        rows.append((int(m.group(1)), m.group(2).replace("_", " "), outcome, _DETAILS.get(nodeid, "")))
    for num, title, outcome, detail in sorted(rows):
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"[{verdict}] criterion {num:2d}: {title}"
        terminalreporter.write_line(f"{line} | {detail}" if detail else line)
