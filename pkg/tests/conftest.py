import os

import pytest

from sle_lab._backend import BACKEND

_LINES = []

QUICK = os.environ.get("SLE_LAB_QUICK", "") in ("1", "true", "yes")


class AcceptanceLog:
    """Collects one PASS/FAIL line per acceptance criterion check."""

    def record(self, criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        _LINES.append(line)
        print(line)
        return ok


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_report_header(config):
    return f"sle_lab kernels: {BACKEND}"


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
