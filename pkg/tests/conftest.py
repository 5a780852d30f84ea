import numpy as np
import pytest

from ellqg.functor import theta_functor
from ellqg.qloop import direct_sum, make_evaluation_module
from ellqg.theta import ModularParams

TAU = 0.8j
HBAR = 0.31 + 0.17j
A_POINT = 0.25 * np.exp(0.9j)
B_POINT = 0.6 * np.exp(2.1j)


@pytest.fixture(scope="session")
def params():
    return ModularParams(tau=TAU, hbar=HBAR, trunc=40)


@pytest.fixture(scope="session")
def sl2(params):
    return make_evaluation_module("sl2", A_POINT, params, seed=7)


@pytest.fixture(scope="session")
def sl3(params):
    return make_evaluation_module("sl3", A_POINT, params, seed=7)


@pytest.fixture(scope="session")
def sl2x2(params):
    return make_evaluation_module("sl2xsl2", A_POINT, params, b=B_POINT, seed=7)


@pytest.fixture(scope="session")
def sl2_sum(params):
    return direct_sum(make_evaluation_module("sl2", A_POINT, params, seed=7),
                      make_evaluation_module("sl2", B_POINT, params, seed=7))


@pytest.fixture(scope="session")
def E2(sl2):
    return theta_functor(sl2)


@pytest.fixture(scope="session")
def E3(sl3):
    return theta_functor(sl3)


@pytest.fixture(scope="session")
def E22(sl2x2):
    return theta_functor(sl2x2)


@pytest.fixture(scope="session")
def Esum(sl2_sum):
    return theta_functor(sl2_sum)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
