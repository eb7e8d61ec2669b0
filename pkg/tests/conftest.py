import math

import pytest

from dimbreak.coefficients import compute_coefficients, profile_coefficients
from dimbreak.dispersion import params_from_tau
from dimbreak.soliton import Grid1D

TAU_SWEEP = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)


@pytest.fixture(scope="session")
def params():
    return params_from_tau(0.2)


@pytest.fixture(scope="session")
def coeffs(params):
    return compute_coefficients(params)


@pytest.fixture(scope="session")
def pcoeffs(params, coeffs):
    return profile_coefficients(params, coeffs)


@pytest.fixture(scope="session")
def reduced_grid(coeffs):
    return Grid1D(40.0 * math.sqrt(coeffs.A1), 2048)
