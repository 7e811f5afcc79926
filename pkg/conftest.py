"""
Shared pytest fixtures
Small quadrature budgets keep the module tests desk-fast
"""

import pytest

from problem import QuadratureSpec, make_problem
from special import sharp_constants


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


@pytest.fixture(scope="session")
def p6():
    return make_problem(6, 4.0)


@pytest.fixture(scope="session")
def p5():
    return make_problem(5, 3.5)


@pytest.fixture(scope="session")
def consts6(p6):
    return sharp_constants(p6)


@pytest.fixture(scope="session")
def radial_spec():
    return QuadratureSpec(scheme="radial1d", rel_tol=1e-10)


@pytest.fixture(scope="session")
def small_spec():
    return QuadratureSpec(nodes=2 ** 12, shifts=8, seed=7)
