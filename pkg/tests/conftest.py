import numpy as np
import pytest

from discscat.io import smooth_bump
from discscat.model import BoundaryCoefficients, DensityProfile, NumericsConfig, PotentialSpec


def bump_potential(center=2.5, half_width=1.0, height=1.0, step=0.005):
    return PotentialSpec.from_function(lambda x: smooth_bump(x, center, half_width, height),
                                       center + half_width, step)


@pytest.fixture(scope="session")
def layered():
    return DensityProfile(2.0, 1.0)


@pytest.fixture(scope="session")
def dirichlet():
    return BoundaryCoefficients.dirichlet()


@pytest.fixture(scope="session")
def bump():
    return bump_potential()


@pytest.fixture(scope="session")
def default_cfg():
    return NumericsConfig()


def soliton_kernel(x, y, kappa, m):
    """Closed-form K for F0(s) = m^2 exp(-kappa s) with no reflection term."""
    return -m * m * np.exp(-kappa * (x + y)) / (1.0 + m * m * np.exp(-2 * kappa * x) / (2 * kappa))


def soliton_potential(x, kappa, m):
    u = m * m * np.exp(-2 * kappa * np.asarray(x, dtype=float))
    return -4.0 * kappa * u / (1.0 + u / (2 * kappa)) ** 2
