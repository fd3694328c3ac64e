import os

import pytest

# criterion id -> (passed, detail), filled by tests/test_acceptance.py
CRITERIA = {}

LONG = os.environ.get("ARCPD_LONG") == "1"


def pytest_collection_modifyitems(config, items):
    if LONG:
        return
    skip = pytest.mark.skip(reason="long mode only (set ARCPD_LONG=1)")
    for item in items:
        if "longmode" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int(k.split(".")[0]), k)):
        passed, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
