"""
Shared fixtures: the logistic demo model, an asymmetric piecewise model and seeded generators
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.drift.drift_model import make_linear_drift, make_piecewise_linear_drift  # noqa: E402

LOGISTIC_SIGMA2 = 2.0
ASYMMETRIC_NODES = [(0.0, 1.5), (0.4, 0.0), (1.0, -1.0)]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long simulations and large Monte Carlo runs")


@pytest.fixture(scope='session')
def logistic_model():
    """
    b(u) = 2(1/2 - u) with sigma^2 = 2; the limit law is the standard logistic
    """
    return make_linear_drift(2.0, sigma2=LOGISTIC_SIGMA2)


@pytest.fixture(scope='session')
def asymmetric_model():
    """
    Piecewise drift with V = (-1.5, 1) and B(1) = 0
    """
    return make_piecewise_linear_drift(ASYMMETRIC_NODES, sigma2=LOGISTIC_SIGMA2)


@pytest.fixture(scope='session')
def logistic_law(logistic_model):
    from src.stationary.nonlinear_stationary import NonlinearLaw

    return NonlinearLaw(logistic_model)


@pytest.fixture(scope='session')
def asymmetric_law(asymmetric_model):
    from src.stationary.nonlinear_stationary import NonlinearLaw

    return NonlinearLaw(asymmetric_model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
