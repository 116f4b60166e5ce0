import numpy as np
import pytest
from scipy.constants import pi

from ionsim.ion_crystal import (
    CrystalConfig,
    EquilibriumSolverError,
    ZigZagInstabilityError,
    chain_modes,
    equilibrium_force,
    periodic_modes,
    solve_equilibrium,
    stiffness_matrix,
    transverse_modes,
)

YB_TRAP = dict(omega_z=2 * pi * 0.1e6, omega_x=2 * pi * 5e6)


def test_two_ion_positions_analytic():
    cfg = CrystalConfig(n_ions=2, **YB_TRAP)
    u = solve_equilibrium(cfg)
    expected = (0.25) ** (1.0 / 3.0)
    np.testing.assert_allclose(u, [-expected, expected], atol=1e-10)


def test_three_ion_positions_analytic():
    cfg = CrystalConfig(n_ions=3, **YB_TRAP)
    u = solve_equilibrium(cfg)
    expected = (1.25) ** (1.0 / 3.0)
    np.testing.assert_allclose(u, [-expected, 0.0, expected], atol=1e-10)


@pytest.mark.parametrize("n", [2, 5, 10, 21, 50])
def test_equilibrium_residual_and_symmetry(n):
    cfg = CrystalConfig(n_ions=n, **YB_TRAP)
    u = solve_equilibrium(cfg)
    assert np.max(np.abs(equilibrium_force(u))) < 1e-12
    np.testing.assert_allclose(u, -u[::-1], atol=1e-10)
    assert np.all(np.diff(u) > 0)


def test_fifty_ion_minimum_spacing():
    # exact solution for the 50-ion chain at these settings; the literature
    # value 4.4 um corresponds to a weaker axial trap (see decisions log)
    cfg = CrystalConfig(n_ions=50, **YB_TRAP)
    u = solve_equilibrium(cfg)
    a0 = np.min(np.diff(u)) * cfg.length_scale
    np.testing.assert_allclose(a0, 2.882e-6, rtol=1e-3)


def test_two_ion_modes_analytic():
    cfg = CrystalConfig(n_ions=2, omega_z=2 * pi * 1e6, omega_x=2 * pi * 5e6)
    data = chain_modes(cfg)
    expected = np.array([np.sqrt(cfg.omega_x**2 - cfg.omega_z**2), cfg.omega_x])
    np.testing.assert_allclose(data.frequencies, expected, rtol=1e-12)


@pytest.mark.parametrize("n", [3, 10, 30])
def test_com_mode_is_trap_frequency(n):
    cfg = CrystalConfig(n_ions=n, **YB_TRAP)
    data = chain_modes(cfg)
    assert abs(data.frequencies.max() - cfg.omega_x) < 1e-10 * cfg.omega_x


def test_displacements_diagonalize_stiffness():
    cfg = CrystalConfig(n_ions=12, **YB_TRAP)
    u = solve_equilibrium(cfg)
    data = transverse_modes(cfg, u)
    k = stiffness_matrix(cfg, u)
    d = data.displacements.T @ k @ data.displacements
    off = d - np.diag(np.diag(d))
    assert np.max(np.abs(off)) < 1e-9 * cfg.omega_x**2
    assert np.max(np.abs(data.displacements.T @ data.displacements - np.eye(12))) < 1e-10


def test_zigzag_instability_raises():
    cfg = CrystalConfig(n_ions=12, omega_z=2 * pi * 0.9e6, omega_x=2 * pi * 1.0e6)
    u = solve_equilibrium(cfg)
    with pytest.raises(ZigZagInstabilityError):
        transverse_modes(cfg, u)


def test_periodic_modes_limits():
    # beta = 0 decouples the ions: flat band at omega_x
    wx = 2 * pi * 5e6
    flat = periodic_modes(8, a0=4e-6, beta_x=0.0, omega_x=wx)
    np.testing.assert_allclose(flat.frequencies, wx, rtol=1e-14)
    # the q = 0 plane wave always sits at the bare trap frequency
    data = periodic_modes(50, a0=4e-6, beta_x=0.01, omega_x=wx)
    assert abs(data.frequencies.max() - wx) < 1e-9 * wx
    assert data.displacements.shape == (50, 50)
    # unitarity of the plane-wave matrix
    g = data.displacements.conj().T @ data.displacements
    assert np.max(np.abs(g - np.eye(50))) < 1e-10


def test_periodic_modes_pair_degeneracy():
    data = periodic_modes(50, a0=4.4e-6, beta_x=0.00966, omega_x=2 * pi * 5e6)
    f = np.sort(data.frequencies)
    # plane waves at +/-q are degenerate: all interior levels come in pairs
    interior = f[1:-1]
    gaps = np.abs(interior[0::2] - interior[1::2])
    assert np.max(gaps) < 1e-9 * f.max()


def test_periodic_matches_exact_bandwidth():
    cfg = CrystalConfig(n_ions=50, **YB_TRAP)
    exact = chain_modes(cfg)
    model = periodic_modes(50, exact.a0, exact.beta_x, cfg.omega_x)
    bw_exact = exact.frequencies.max() - exact.frequencies.min()
    bw_model = model.frequencies.max() - model.frequencies.min()
    assert abs(bw_model - bw_exact) / bw_exact < 0.05


def test_periodic_modes_odd_n_rejected():
    with pytest.raises(ValueError):
        periodic_modes(7, a0=4e-6, beta_x=0.01, omega_x=2 * pi * 5e6)


def test_invalid_configs_rejected():
    with pytest.raises(ValueError):
        CrystalConfig(n_ions=1, **YB_TRAP)
    with pytest.raises(ValueError):
        CrystalConfig(n_ions=4, omega_z=2 * pi * 5e6, omega_x=2 * pi * 1e6)
