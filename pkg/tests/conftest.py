import numpy as np
import pytest

from csdnls import HardyState, rational_profile

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def mixed_state(N):
    """0.2 + 0.3 e^{ix}, the two-mode test datum used throughout."""
    return HardyState.from_dict({0: 0.2, 1: 0.3}, N)


def profile_state(N, q=0.4, norm=None):
    u = rational_profile(q, None, N)
    if norm is not None:
        u = (norm / np.linalg.norm(u.coeffs)) * u
    return u


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
