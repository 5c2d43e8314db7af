import json
import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def oracles():
    with open(os.path.join(FIXTURES, "oracles.json")) as fh:
        return json.load(fh)


def record_criterion(name, passed, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
