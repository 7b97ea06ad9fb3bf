import numpy as np
import pytest


@pytest.fixture
def two_blobs():
    rng = np.random.default_rng(7)
    a = rng.normal([0.0, 0.0], 1.0, size=(150, 2))
    b = rng.normal([10.0, 0.0], 1.0, size=(150, 2))
    return np.vstack([a, b]), np.repeat([0, 1], 150)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one PASS/FAIL line per acceptance criterion."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
