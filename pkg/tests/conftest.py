import numpy as np
import pytest

from phasesep import (
    Grid,
    LogPotential,
    PotentialConstants,
    make_polynomial_family,
)


@pytest.fixture(scope="session")
def potential():
    return LogPotential(theta=1.0, theta0=2.0)


@pytest.fixture(scope="session")
def pot_constants(potential):
    return PotentialConstants.for_potential(potential)


@pytest.fixture(scope="session")
def family():
    return make_polynomial_family(s0=3, K=16, sigma0=0.1, gamma=1.0)


@pytest.fixture(scope="session")
def grid63():
    return Grid(d=1, n=63, L=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)
