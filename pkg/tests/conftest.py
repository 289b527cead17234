import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("amenlab", deadline=None, max_examples=40)
settings.load_profile("amenlab")

_ACCEPTANCE = {}


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """record(number, ok, detail): one summary line per acceptance criterion."""

    def record(number, ok, detail):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
