import os

import pytest
from hypothesis import HealthCheck, settings

from popleader.protocols import pairing_program

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance criterion lines, printed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def P():
    return pairing_program()


@pytest.fixture
def record_criterion():
    def record(number, passed, detail=""):
        ACCEPTANCE_LINES.append((number, passed, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
