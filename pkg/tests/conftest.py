import numpy as np
import pytest

from hfsc import build_model, validate_spectrum


@pytest.fixture
def model():
    # alpha1 = alpha2 = alpha3 = 1, k = 1  ->  c = 3, alpha4 = -6
    return build_model(1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def one_soliton():
    return validate_spectrum([(0.2 + 0.3j, 1.0, 0.5)])


@pytest.fixture
def collision():
    return validate_spectrum([(0.1 + 0.3j, 1.0, 1.0), (0.3 + 0.5j, 1.0, 1.0)])


@pytest.fixture
def breather_moving():
    return validate_spectrum([(0.1 + 0.3j, 1.0, 1.0), (0.1 + 0.5j, 1.0, 1.0)])


@pytest.fixture
def breather_static():
    return validate_spectrum([(0.3j, 1.0, 1.0), (0.5j, 1.0, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for n, m in sys.modules.items() if n.split(".")[-1] == "test_acceptance"), None)
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
