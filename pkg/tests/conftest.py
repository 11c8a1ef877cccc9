import numpy as np
import pytest

from cavchem import analytics
from cavchem.analytics import mhz

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def kappa_eq_gamma():
    """Factory for kappa = Gamma = 2pi x 12 MHz at a given cooperativity."""
    gamma = mhz(12.0)

    def make(C, omega_over_kappa=0.5, f_fc=1.0):
        p = analytics.SystemParams.from_cooperativity(C, gamma, gamma, f_fc=f_fc)
        return p.replace(omega=omega_over_kappa * p.kappa)

    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
