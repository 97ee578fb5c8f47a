import numpy as np
import pytest
from hypothesis import settings

from dprtf.stft import default_config

settings.register_profile("dprtf", max_examples=30, deadline=None)
settings.load_profile("dprtf")


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; returns the outcome."""
    def record(name, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {name}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
