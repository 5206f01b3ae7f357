import numpy as np
import pytest

from jacobi_spectra import CoefficientModel

SEED = 20260314


def random_bounded_model(rng, length=260):
    """a_n ~ U(-1/4, 1/4), b_n ~ U(7/4, 9/4), repeat-last tail."""
    a = rng.uniform(-0.25, 0.25, length)
    b = rng.uniform(1.75, 2.25, length)
    return CoefficientModel.from_table(zip(a, b), "repeat-last")


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def free():
    return CoefficientModel.constant(0.0, 0.5)


@pytest.fixture
def linear():
    # b_n = n + 1, a_n = 0
    return CoefficientModel.power(1.0, 1.0)


@pytest.fixture
def bounded_models():
    rng = np.random.default_rng(SEED)
    return [random_bounded_model(rng) for _ in range(100)]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:  # pragma: no cover
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
