import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import re

_OUTCOMES = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2).replace("_", " "))
    if report.failed or (report.when == "call" and key not in _OUTCOMES):
        _OUTCOMES[key] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_OUTCOMES.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name:<45} {outcome}")
