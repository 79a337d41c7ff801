import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def dft_matrix(n: int) -> np.ndarray:
    """Direct unitary DFT matrix; oracle for the FFT wrappers."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.REPORT:
            terminalreporter.write_line(line)
