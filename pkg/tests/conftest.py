import numpy as np
import pytest

from bgklab import (boltzmannian, build_chart, make_equilibrium,
                    make_potential_family)


@pytest.fixture(scope="session")
def sin2_pot():
    return make_potential_family("sin2", 0.5)


@pytest.fixture(scope="session")
def boltz_eq(sin2_pot):
    return make_equilibrium(boltzmannian(1.0), sin2_pot, eps=0.05, n_x=512)


@pytest.fixture(scope="session")
def small_chart(boltz_eq):
    """Coarse chart shared by the action-angle and spectral tests."""
    return build_chart(boltz_eq, n_per_region=96, e_max_factor=50.0,
                       offset_factor=1e-8)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250809)
