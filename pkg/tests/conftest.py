import os

import pytest
from hypothesis import settings

from nfext import kernels

settings.register_profile("nfext", deadline=None, max_examples=60, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "nfext"))

ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE_LINES.append((number, f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"))


@pytest.fixture(params=sorted(kernels.implementations()))
def backend(request):
    return kernels.implementations()[request.param]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
