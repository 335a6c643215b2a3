import numpy as np
import pytest

from spnorm import GaussianParams, RadialField, constant_potential, gaussian_field, make_grid


@pytest.fixture(scope="session")
def grid_default():
    return make_grid(2049, 40.0)


@pytest.fixture(scope="session")
def grid_fine():
    return make_grid(8193, 40.0)


@pytest.fixture(scope="session")
def grid_small():
    return make_grid(256, 40.0)


@pytest.fixture(scope="session")
def const_pot():
    return constant_potential(1.0)


@pytest.fixture(scope="session")
def unit_gaussian(grid_default):
    """pi^{-3/4} exp(-r^2/2): unit mass, closed-form B, C, N."""
    return gaussian_field(GaussianParams(sigma=1.0, mass=1.0), grid_default)


def smooth_field(grid, rng, bumps=3, width_range=(0.8, 2.5), center_max=4.0):
    """Random even-symmetrized bump sum, vanishing at the boundary.

    Even symmetrization keeps u'(0) = 0, as a radial profile of a smooth
    function on R^3 must.
    """
    r = grid.nodes
    u = np.zeros_like(r)
    for _ in range(bumps):
        amp = rng.normal()
        s = rng.uniform(*width_range)
        c = rng.uniform(0.0, center_max)
        u += amp * (np.exp(-((r - c) ** 2) / (2 * s * s)) + np.exp(-((r + c) ** 2) / (2 * s * s)))
    u[-1] = 0.0
    return RadialField(grid=grid, values=u)


def gaussian_moments(sigma, mass, p):
    """Closed-form D, B, C, N for the normalized Gaussian profile."""
    D = mass
    B = 1.5 * mass / sigma**2
    C = mass**2 * np.sqrt(2.0 / np.pi) / sigma
    alpha_sq = mass / (np.pi**1.5 * sigma**3)
    N = alpha_sq ** (p / 2.0) * (2.0 * np.pi * sigma**2 / p) ** 1.5
    return D, B, C, N
