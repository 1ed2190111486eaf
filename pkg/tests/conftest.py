import numpy as np
import pytest

from helpers import orthonormal_factors


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_factors(rng):
    return orthonormal_factors((4, 5, 3), (3, 4, 2), rng)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
