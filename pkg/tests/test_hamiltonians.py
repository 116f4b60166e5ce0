import numpy as np
import pytest
import scipy.linalg as sla
from scipy.constants import pi

from ionsim import operators as ops
from ionsim.couplings import coupling_matrix_numeric, light_forces, mode_detunings
from ionsim.hamiltonians import (
    LRHM_XXZ,
    MODULATED_ISING,
    QIM,
    XYZ,
    DimensionOverflowError,
    EffectiveModelSpec,
    build_effective,
    build_interaction_hamiltonian,
    build_lab_hamiltonian,
    driven_axis,
    driven_pauli,
    driven_pauli_conjugation,
    frame_unitaries,
    uhat_phase,
)
from ionsim.ion_crystal import NormalModeData

from conftest import make_drive


def test_hermiticity_random_times(two_ion_modes, fig1_drive, rng):
    h_lab = build_lab_hamiltonian(two_ion_modes, fig1_drive, n_max=2)
    h_int = build_interaction_hamiltonian(two_ion_modes, fig1_drive, n_max=2)
    for t in rng.uniform(0.0, 1e-3, size=25):
        assert h_lab.hermiticity_defect(t) < 1e-12
        assert h_int.hermiticity_defect(t) < 1e-12


def test_lab_reduces_to_bare_without_drives(two_ion_modes):
    drive = make_drive(omega_l_hz=0.0, h0_hz=0.0)
    h_lab = build_lab_hamiltonian(two_ion_modes, drive, n_max=2)
    h = h_lab(0.37e-6)
    assert np.max(np.abs(h - np.diag(np.diag(h)))) < 1e-12


def test_lab_conjugation_matches_interaction_picture(two_ion_modes, fig1_drive, rng):
    # moving the explicitly rotating builder into the frame of the bare
    # Hamiltonian must reproduce the interaction-picture builder exactly
    n_max = 2
    omega0 = 2 * pi * 9.8e9
    h_lab = build_lab_hamiltonian(two_ion_modes, fig1_drive, n_max, omega0=omega0)
    h_int = build_interaction_hamiltonian(two_ion_modes, fig1_drive, n_max)
    h0_static = h_lab.terms[0].matrix
    for t in rng.uniform(0.0, 2e-4, size=8):
        u0 = np.diag(np.exp(1.0j * np.diag(h0_static) * t))
        conj = u0 @ (h_lab(t) - h0_static) @ u0.conj().T
        np.testing.assert_allclose(conj, h_int(t), atol=1e-9 * np.linalg.norm(h_int(t)))


def test_interaction_carrier_term(two_ion_modes):
    drive = make_drive(xi=0.0)
    h = build_interaction_hamiltonian(two_ion_modes, drive, n_max=1)
    # at xi = 0 the carrier is the constant h0 sum sigma^x; subtracting the
    # MS part at its zero crossings isolates it
    x_tot = sum(
        ops.embed_spin(ops.spin_site_operator(ops.SX, i, 2), 2, 1) for i in range(2)
    )
    carrier = h.terms[-1]
    np.testing.assert_allclose(carrier.coeff(0.0) * carrier.matrix, drive.h0 * x_tot, atol=1e-9)


def test_driven_pauli_limits(fig1_drive):
    c0 = driven_pauli(0.0, fig1_drive)
    np.testing.assert_allclose(
        c0, [np.cos(fig1_drive.phi_s), -np.sin(fig1_drive.phi_s), 0.0], atol=1e-12
    )
    drive = make_drive(xi=0.0)
    for t in (0.0, 1.1e-4, 3.7e-4):
        c = driven_pauli(t, drive)
        expected = [
            np.cos(drive.phi_s),
            -np.sin(drive.phi_s) * np.cos(2 * drive.h0 * t),
            np.sin(drive.phi_s) * np.sin(2 * drive.h0 * t),
        ]
        np.testing.assert_allclose(c, expected, atol=1e-12)


def test_driven_pauli_series_vs_conjugation(fig1_drive):
    # Jacobi-Anger series against the exact two-level conjugation over one
    # modulation period
    period = pi / fig1_drive.h0
    for t in np.linspace(0.0, period, 37):
        series = driven_pauli(t, fig1_drive)
        exact = driven_pauli_conjugation(t, fig1_drive)
        np.testing.assert_allclose(series, exact, atol=1e-10)
        assert abs(np.linalg.norm(series) - 1.0) < 1e-10


def test_frame_unitaries(fig1_drive):
    u0, uhat = frame_unitaries(0.0, fig1_drive, 2)
    np.testing.assert_allclose(uhat, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(u0, np.eye(4), atol=1e-12)
    t = 2 * pi / fig1_drive.delta
    _, uhat = frame_unitaries(t, fig1_drive, 2)
    x_tot = ops.spin_site_operator(ops.SX, 0, 2) + ops.spin_site_operator(ops.SX, 1, 2)
    np.testing.assert_allclose(uhat, sla.expm(1.0j * (pi / 2.0) * x_tot), atol=1e-12)
    # unitarity and the dressed-axis cross-check
    for t in (1.3e-4, 7.7e-4):
        u0, uhat = frame_unitaries(t, fig1_drive, 2)
        np.testing.assert_allclose(uhat @ uhat.conj().T, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(u0 @ u0.conj().T, np.eye(4), atol=1e-12)
        sphi1 = ops.spin_site_operator(ops.sigma_phase(fig1_drive.phi_s), 0, 2)
        dressed = uhat @ sphi1 @ uhat.conj().T
        c = driven_pauli(t, fig1_drive)
        rebuilt = (
            c[0] * ops.spin_site_operator(ops.SX, 0, 2)
            + c[1] * ops.spin_site_operator(ops.SY, 0, 2)
            + c[2] * ops.spin_site_operator(ops.SZ, 0, 2)
        )
        np.testing.assert_allclose(dressed, rebuilt, atol=1e-10)


def test_effective_xyz_su2_point(rng):
    j = rng.normal(size=(4, 4))
    j = j + j.T
    np.fill_diagonal(j, 0.0)
    phi_c = np.arccos(1.0 / np.sqrt(3.0))
    h = build_effective(EffectiveModelSpec.xyz_from_drive(j, phi_c, 0.0))(0.0)
    for axis in "xyz":
        total = sum(ops.spin_site_operator(ops.PAULI[axis], i, 4) for i in range(4))
        assert np.max(np.abs(h @ total - total @ h)) < 1e-12


def test_effective_qim_two_ion_spectrum():
    j = np.array([[0.0, 1.0], [1.0, 0.0]])
    h = build_effective(EffectiveModelSpec(kind=QIM, j=j, phi_s=0.3, h0=0.0))(0.0)
    w = np.linalg.eigvalsh(h)
    np.testing.assert_allclose(w, [-1.0, -1.0, 1.0, 1.0], atol=1e-12)


def test_effective_qim_field_ground_state():
    # the paramagnetic ground state of the field term at phi_s = 0 is the
    # product of -y eigenstates (the stated phase relation phi_s = phi_d + pi/2)
    j = np.zeros((2, 2))
    h = build_effective(EffectiveModelSpec(kind=QIM, j=j, phi_s=0.0, h0=1.0))(0.0)
    w, v = np.linalg.eigh(h)
    gs = v[:, 0]
    target = ops.spin_product_state([ops.KET_MINUS_Y, ops.KET_MINUS_Y])
    assert abs(np.vdot(target, gs)) ** 2 > 1.0 - 1e-12


def test_effective_lrhm():
    jt = np.array([[0.0, 1.0], [1.0, 0.0]])
    h = build_effective(EffectiveModelSpec(kind=LRHM_XXZ, j=jt))(0.0)
    w = np.linalg.eigvalsh(h)
    # Jt S.S for two spins: singlet at -3/4 Jt, triplet at +1/4 Jt
    np.testing.assert_allclose(w, [-0.75, 0.25, 0.25, 0.25], atol=1e-12)


def test_modulated_ising_time_average_is_xyz(rng):
    j = rng.normal(size=(3, 3))
    j = np.abs(j + j.T)
    np.fill_diagonal(j, 0.0)
    h0 = 300.0 * np.max(j)
    spec = EffectiveModelSpec(kind=MODULATED_ISING, j=j, phi_s=0.9, h0=h0, delta=4.0 * h0, xi=0.09)
    h_mod = build_effective(spec)
    period = pi / h0
    grid = np.linspace(0.0, period, 4001)
    avg = np.zeros_like(h_mod(0.0))
    for t in grid:
        avg = avg + h_mod(t)
    avg /= len(grid)
    h_xyz = build_effective(EffectiveModelSpec.xyz_from_drive(j, 0.9, 0.09))(0.0)
    scale = np.linalg.norm(h_xyz)
    bound = np.max(j) * (np.max(j) / (2.0 * h0))
    assert np.linalg.norm(avg - h_xyz) < max(10.0 * bound, 1e-3 * scale)


def test_dimension_guard(two_ion_modes, fig1_drive):
    with pytest.raises(DimensionOverflowError):
        build_interaction_hamiltonian(two_ion_modes, fig1_drive, n_max=200)


def single_mode_system(omega, delta, f_scale):
    modes = NormalModeData(
        positions=np.array([0.0, 1.0]),
        frequencies=np.array([omega]),
        displacements=np.array([[2**-0.5], [2**-0.5]]),
        a0=1.0,
        beta_x=0.01,
        omega_tilde_x=omega,
    )
    drive = make_drive(detuning_hz=delta / (2 * pi), omega_l_hz=f_scale, omega_x=omega)
    return modes, drive


def dressed_ms_hamiltonian(t, modes, drive, n_max):
    """A5: dressed sideband force (no carrier), used by the Magnus oracles."""
    n = modes.n_ions
    m = len(modes.frequencies)
    f = np.real(light_forces(modes, drive))
    delta = mode_detunings(modes, drive)
    c = driven_axis(t, drive)
    axis_op = c[0] * ops.SX + c[1] * ops.SY + c[2] * ops.SZ
    a = ops.destroy(n_max)
    h = np.zeros((2**n * (n_max + 1) ** m,) * 2, dtype=complex)
    for k in range(m):
        a_full = ops.embed_mode(ops.mode_operator(a, k, m, n_max), n)
        phon = a_full * np.exp(1.0j * (drive.phi_m - delta[k] * t))
        phon = phon + phon.conj().T
        spin = sum(
            f[i, k] * ops.embed_spin(ops.spin_site_operator(axis_op, i, n), m, n_max)
            for i in range(n)
        )
        h += spin @ phon
    return h


def test_magnus_first_order_stays_bounded(two_ion_modes, fig1_drive):
    # numerically integrated first-order generator stays below the
    # far-detuned displacement bound over ten coupling periods
    n_max = 1
    j = coupling_matrix_numeric(two_ion_modes, fig1_drive)
    t_end = 10.0 * 2.0 * pi / abs(j[0, 1])
    f = np.abs(light_forces(two_ion_modes, fig1_drive))
    delta = np.abs(mode_detunings(two_ion_modes, fig1_drive))
    bound = 2.0 * np.sum(f / delta[None, :])
    n_nodes = int(t_end * np.max(delta) / (2 * pi) * 12)
    grid = np.linspace(0.0, t_end, n_nodes)
    dt = grid[1] - grid[0]
    omega1 = np.zeros((16, 16), dtype=complex)
    checkpoints = set(np.linspace(0, n_nodes - 1, 12, dtype=int))
    h_prev = dressed_ms_hamiltonian(grid[0], two_ion_modes, fig1_drive, n_max)
    for idx in range(1, n_nodes):
        h_now = dressed_ms_hamiltonian(grid[idx], two_ion_modes, fig1_drive, n_max)
        omega1 += -0.5j * dt * (h_prev + h_now)
        h_prev = h_now
        if idx in checkpoints:
            assert np.linalg.norm(omega1, 2) < bound


def test_magnus_second_order_gives_coupling_average(two_ion_modes, fig1_drive):
    # i Omega_2 / t approaches the average coupling Hamiltonian; the
    # bounded boundary pieces of Omega_2 (size f^2/delta^2) die off as 1/t,
    # so the residue is checked to shrink toward the O(J h0/delta) floor
    # as the window grows over whole modulation periods
    n_max = 1
    modes, drive = two_ion_modes, fig1_drive
    period = pi / drive.h0
    delta = np.abs(mode_detunings(modes, drive))
    j = coupling_matrix_numeric(modes, drive)
    dim = 16

    def residue(n_periods: int) -> tuple[float, float]:
        t_end = n_periods * period
        n_nodes = int(t_end * np.max(delta) / (2 * pi) * 16)
        grid = np.linspace(0.0, t_end, n_nodes)
        dt = grid[1] - grid[0]
        cum = np.zeros((dim, dim), dtype=complex)
        omega2 = np.zeros((dim, dim), dtype=complex)
        h_avg = np.zeros((dim, dim), dtype=complex)
        h_prev = dressed_ms_hamiltonian(grid[0], modes, drive, n_max)
        for idx in range(1, n_nodes):
            h_now = dressed_ms_hamiltonian(grid[idx], modes, drive, n_max)
            cum_mid = cum + 0.25 * dt * (h_prev + h_now)
            cum += 0.5 * dt * (h_prev + h_now)
            omega2 += -0.5 * dt * (h_now @ cum_mid - cum_mid @ h_now)
            h_prev = h_now
        for t in grid:
            c = driven_axis(t, drive)
            axis_op = c[0] * ops.SX + c[1] * ops.SY + c[2] * ops.SZ
            s1 = ops.embed_spin(ops.spin_site_operator(axis_op, 0, 2), 2, n_max)
            s2 = ops.embed_spin(ops.spin_site_operator(axis_op, 1, 2), 2, n_max)
            h_avg += j[0, 1] * s1 @ s2
        h_avg /= len(grid)
        diff = 1.0j * omega2 / t_end - h_avg
        diff -= np.trace(diff) / dim * np.eye(dim)  # drop the c-number loop phase
        return float(np.linalg.norm(diff)), float(np.linalg.norm(h_avg))

    r10, scale = residue(10)
    r40, _ = residue(40)
    assert r40 < r10 / 2.5
    assert r40 < 0.1 * scale
