import numpy as np
import pytest
from scipy.constants import pi
from scipy.special import zeta

from ionsim.field_theory import (
    nlsm_from_couplings,
    power_law_nlsm,
    trapped_ion_g,
    trapped_ion_tail,
    two_neighbor_g,
)


def test_nearest_neighbor_limit_exact():
    jt = 2.7
    params = nlsm_from_couplings(lambda r: jt if r == 1 else 0.0, spin=0.5, lattice_a=1.3)
    np.testing.assert_allclose(params.v, 2.0 * 1.3 * 0.5 * jt, rtol=1e-14)
    np.testing.assert_allclose(params.g, 2.0 / 0.5, rtol=1e-14)
    np.testing.assert_allclose(params.theta, pi, atol=1e-14)
    # the generic-spin statement g = 2/S, v = 2 Jt a S
    params_s1 = nlsm_from_couplings(lambda r: jt if r == 1 else 0.0, spin=1.0)
    np.testing.assert_allclose(params_s1.g, 2.0, rtol=1e-14)
    np.testing.assert_allclose(params_s1.theta, 0.0, atol=1e-14)


def test_two_neighbor_instability():
    assert two_neighbor_g(1.0, 0.0) == pytest.approx(4.0)
    assert two_neighbor_g(1.0, 1.0 / 8.0) == pytest.approx(4.0 / np.sqrt(0.5))
    assert two_neighbor_g(1.0, 0.25) == np.inf
    assert two_neighbor_g(1.0, 0.3) == np.inf
    # matches the generic series evaluator truncated at two neighbors
    g_series = nlsm_from_couplings(
        lambda r: {1: 1.0, 2: 1.0 / 8.0}.get(r, 0.0), spin=0.5
    ).g
    np.testing.assert_allclose(g_series, two_neighbor_g(1.0, 1.0 / 8.0), rtol=1e-14)
    unstable = nlsm_from_couplings(lambda r: {1: 1.0, 2: 0.26}.get(r, 0.0), spin=0.5)
    assert unstable.unstable and unstable.g == np.inf


def test_power_law_haldane_shastry_endpoint():
    p = power_law_nlsm(2.0, j1=1.7, lattice_a=0.9)
    np.testing.assert_allclose(p.v, 4.0 * pi * 0.9 * 1.7, rtol=1e-14)
    np.testing.assert_allclose(p.g, 2.0 * pi, rtol=1e-14)


def test_power_law_large_s_limit():
    p = power_law_nlsm(40.0, j1=2.0, lattice_a=1.1, spin=0.5)
    np.testing.assert_allclose(p.g, 4.0, rtol=1e-10)
    np.testing.assert_allclose(p.v, 2.0 * 1.1 * 0.5 * 2.0, rtol=1e-10)


def test_power_law_matches_brute_force_series():
    # the alternating second-moment sum at s = 3 converges like 1/(4 r_max)
    # after pairing, which bounds the reachable agreement of a direct
    # partial sum; the tolerance reflects that bound at r_max = 2e6
    s = 3.0
    brute = nlsm_from_couplings(lambda r: 1.0 / r**s, spin=0.5, r_max=2_000_000)
    closed = power_law_nlsm(s, j1=1.0, spin=0.5)
    np.testing.assert_allclose(closed.v, brute.v, rtol=1e-6)
    np.testing.assert_allclose(closed.g, brute.g, rtol=1e-6)


def test_power_law_g_continuous_in_s():
    # brute-force agreement where the alternating tail is under control
    for s, r_max, rtol in ((2.5, 400_000, 5e-3), (3.0, 400_000, 1e-5), (4.0, 50_000, 1e-8), (6.0, 10_000, 1e-10)):
        closed = power_law_nlsm(s, j1=1.0, spin=0.5)
        brute = nlsm_from_couplings(lambda r: 1.0 / r**s, spin=0.5, r_max=r_max)
        np.testing.assert_allclose(closed.g, brute.g, rtol=rtol)
    # continuity of the closed form on (2, 12], including the s -> 2+ limit
    grid = np.concatenate([[2.0 + 1e-9], np.linspace(2.05, 12.0, 40)])
    gs = np.array([power_law_nlsm(float(s)).g for s in grid])
    assert np.all(np.abs(np.diff(gs)) < 3.0 * np.diff(grid) + 1e-6)
    np.testing.assert_allclose(gs[0], 2.0 * pi, rtol=1e-4)


def test_power_law_divergence_guard():
    with pytest.raises(ValueError):
        power_law_nlsm(1.5)


def test_trapped_ion_g_constant():
    expected = np.sqrt(7.0 * zeta(3.0) / 2.0) / np.sqrt(np.log(2.0))
    np.testing.assert_allclose(trapped_ion_g(0.0), expected, atol=1e-12)
    np.testing.assert_allclose(trapped_ion_g(0.0), 2.46367720403697, atol=1e-10)
    assert np.isfinite(trapped_ion_g(0.05))
    assert trapped_ion_g(0.4) == np.inf  # log 2 - 2 lambda crosses zero


def test_trapped_ion_g_cross_check_series():
    # the closed form carries the series normalization of a unit spin
    lam = 0.01
    xi0 = -1.0 / np.log((1.0 - np.sqrt(1.0 - lam**2)) / lam)
    tail = trapped_ion_tail(0.25, lam, xi0)
    series = nlsm_from_couplings(tail, spin=1.0, r_max=200_000)
    closed = trapped_ion_g(lam)
    assert abs(series.g - closed) / closed < 0.05


def test_trapped_ion_g_monotone_in_lambda():
    gs = []
    for lam in np.linspace(0.0, 0.1, 6):
        if lam == 0.0:
            gs.append(trapped_ion_g(0.0))
            continue
        xi0 = -1.0 / np.log((1.0 - np.sqrt(1.0 - lam**2)) / lam)
        gs.append(nlsm_from_couplings(trapped_ion_tail(0.25, lam, xi0), spin=1.0).g)
    assert np.all(np.diff(gs) > 0.0)


def test_theta_is_pi_for_spin_half():
    for tail in (lambda r: 1.0 / r**3, lambda r: float(r == 1)):
        assert nlsm_from_couplings(tail, spin=0.5).theta == pytest.approx(pi)
