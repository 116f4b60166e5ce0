import numpy as np
import pytest
from scipy.constants import pi

from ionsim.couplings import DriveSpec
from ionsim.ion_crystal import CrystalConfig, chain_modes


@pytest.fixture(scope="session")
def two_ion_crystal():
    return CrystalConfig(n_ions=2, omega_z=2 * pi * 1e6, omega_x=2 * pi * 5e6)


@pytest.fixture(scope="session")
def two_ion_modes(two_ion_crystal):
    return chain_modes(two_ion_crystal)


def make_drive(
    phi_s=pi / 3,
    omega_l_hz=0.9e6,
    detuning_hz=500e3,
    h0_hz=2.5e3,
    delta_hz=10e3,
    xi=0.09,
    eta=0.07,
    omega_x=2 * pi * 5e6,
    side=-1,
):
    """Figure-1-style drive; side=-1 places the beatnote below the band top."""
    return DriveSpec.from_spin_phase(
        phi_s,
        omega_l=2 * pi * omega_l_hz,
        mu=omega_x + side * 2 * pi * detuning_hz,
        h0=2 * pi * h0_hz,
        delta=2 * pi * delta_hz,
        xi=xi,
        eta=eta,
        omega_x=omega_x,
    )


@pytest.fixture(scope="session")
def fig1_drive(two_ion_crystal):
    return make_drive(omega_x=two_ion_crystal.omega_x)


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)
