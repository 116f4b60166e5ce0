"""Hamiltonian builders on spin (x) truncated-Fock spaces.

Operators are represented as sums of scalar coefficient functions times
static matrices, so propagators can re-evaluate them cheaply. The
project-wide convention sigma^theta = sigma^+ e^{i theta} + H.c. is used
everywhere; the three-tone carrier has tones (omega0, h0),
(omega0 +/- Delta, h0 xi / 2) with zero tone phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.constants import pi
from scipy.special import jv

from . import operators as ops
from .couplings import DriveSpec, bessel_m_max, light_forces, mode_detunings, xyz_couplings
from .ion_crystal import NormalModeData

# 171Yb+ hyperfine clock splitting, the default optical-frame reference.
OMEGA0_YB171 = 2.0 * pi * 12.642812e9

MAX_HILBERT_DIM = 1 << 14


class DimensionOverflowError(ValueError):
    def __init__(self, dim: int, limit: int):
        super().__init__(f"Hilbert dimension {dim} exceeds the configured limit {limit}")


@dataclass(frozen=True)
class Term:
    """One coefficient-times-matrix summand; frequency is the coefficient's
    fastest angular frequency (0 for static terms)."""

    matrix: np.ndarray
    coeff: Callable[[float], complex] | None = None
    frequency: float = 0.0


@dataclass
class OperatorExpr:
    """Time-dependent Hermitian operator H(t) = sum_k c_k(t) A_k."""

    n_spins: int
    n_modes: int
    n_max: int
    terms: list = field(default_factory=list)
    ms_structure: "MsStructure | None" = None

    @property
    def dim(self) -> int:
        return 2**self.n_spins * (self.n_max + 1) ** self.n_modes

    def __call__(self, t: float) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            c = 1.0 if term.coeff is None else term.coeff(t)
            h += c * term.matrix
        return h

    def max_frequency(self) -> float:
        return max((term.frequency for term in self.terms), default=0.0)

    def hermiticity_defect(self, t: float) -> float:
        h = self(t)
        scale = np.linalg.norm(h)
        if scale == 0.0:
            return 0.0
        return np.linalg.norm(h - h.conj().T) / scale


@dataclass(frozen=True)
class MsStructure:
    """Structure record for the dressed sideband force, used by the
    split-step propagator: H(t) = sum_in f_in sigma_i^axis(t)
    (a_n e^{i phi_m - i delta_n t} + H.c.) + carrier absorbed in axis."""

    forces: np.ndarray  # (N, M) real amplitudes f_in (rad/s)
    detunings: np.ndarray  # (M,) delta_n = omega_n - mu (rad/s)
    phi_m: float
    drive: DriveSpec
    n_max: int


def _check_dim(n_spins: int, n_modes: int, n_max: int, max_dim: int) -> None:
    dim = 2**n_spins * (n_max + 1) ** n_modes
    if dim > max_dim:
        raise DimensionOverflowError(dim, max_dim)


def uhat_phase(t: float, drive: DriveSpec) -> float:
    """theta(t) = h0 (t + xi sin(Delta t) / Delta); Uhat = exp(i theta sum sigma^x)."""
    return drive.h0 * (t + drive.xi * np.sin(drive.delta * t) / drive.delta)


def driven_pauli(t: float, drive: DriveSpec, m_max: int | None = None) -> np.ndarray:
    """Pauli coefficients (c_x, c_y, c_z) of the dressed operator sigma^{phi_s}(t).

    Jacobi-Anger series with Bessel argument 2 xi h0 / Delta over the
    frequency comb 2 h0 + m Delta. (The tone expansion is driven by the
    full 2 theta(t) rotation angle, hence the factor two.)
    """
    x = 2.0 * drive.xi * drive.h0 / drive.delta
    if m_max is None:
        m_max = bessel_m_max(x)
    m = np.arange(-m_max, m_max + 1)
    weights = jv(m, x)
    phases = (2.0 * drive.h0 + m * drive.delta) * t
    cos_sum = float(weights @ np.cos(phases))
    sin_sum = float(weights @ np.sin(phases))
    s = np.sin(drive.phi_s)
    return np.array([np.cos(drive.phi_s), -s * cos_sum, s * sin_sum])


def driven_pauli_conjugation(t: float, drive: DriveSpec) -> np.ndarray:
    """Same coefficients from the exact 2x2 conjugation by Uhat(t)."""
    theta = uhat_phase(t, drive)
    u = np.cos(theta) * ops.ID2 + 1.0j * np.sin(theta) * ops.SX
    dressed = u @ ops.sigma_phase(drive.phi_s) @ u.conj().T
    return np.array(
        [
            np.real(np.trace(dressed @ ops.SX)) / 2.0,
            np.real(np.trace(dressed @ ops.SY)) / 2.0,
            np.real(np.trace(dressed @ ops.SZ)) / 2.0,
        ]
    )


def build_lab_hamiltonian(
    modes: NormalModeData,
    drive: DriveSpec,
    n_max: int,
    omega0: float = OMEGA0_YB171,
    max_dim: int = MAX_HILBERT_DIM,
) -> OperatorExpr:
    """Bare + sideband-force + three-tone Hamiltonian with explicit optical
    rotations (the optical-frequency physics itself is already folded into
    the two-beam force, as in the resolved-sideband derivation)."""
    n = modes.n_ions
    m_modes = len(modes.frequencies)
    _check_dim(n, m_modes, n_max, max_dim)
    expr = OperatorExpr(n_spins=n, n_modes=m_modes, n_max=n_max)

    h0_static = np.zeros((expr.dim, expr.dim), dtype=complex)
    for i in range(n):
        h0_static += 0.5 * omega0 * ops.embed_spin(
            ops.spin_site_operator(ops.SZ, i, n), m_modes, n_max
        )
    num = ops.destroy(n_max).conj().T @ ops.destroy(n_max)
    for k, w in enumerate(modes.frequencies):
        h0_static += w * ops.embed_mode(ops.mode_operator(num, k, m_modes, n_max), n)
    expr.terms.append(Term(matrix=h0_static))

    f = light_forces(modes, drive)
    omega_red = omega0 - drive.mu
    omega_blue = omega0 + drive.mu
    a_single = ops.destroy(n_max)
    for k in range(m_modes):
        a_full = ops.embed_mode(ops.mode_operator(a_single, k, m_modes, n_max), n)
        coupling = sum(
            f[i, k] * ops.embed_spin(ops.spin_site_operator(ops.SPLUS, i, n), m_modes, n_max)
            for i in range(n)
        )
        # force amplitude carries the i of the light-force definition
        red = 1.0j * coupling @ a_full * np.exp(1.0j * drive.phi_r)
        blue = 1.0j * coupling @ a_full.conj().T * np.exp(1.0j * drive.phi_b)
        for mat, w in ((red, omega_red), (blue, omega_blue)):
            expr.terms.append(
                Term(matrix=mat, coeff=lambda t, w=w: np.exp(-1.0j * w * t), frequency=w)
            )
            expr.terms.append(
                Term(
                    matrix=mat.conj().T,
                    coeff=lambda t, w=w: np.exp(1.0j * w * t),
                    frequency=w,
                )
            )

    splus_tot = sum(
        ops.embed_spin(ops.spin_site_operator(ops.SPLUS, i, n), m_modes, n_max)
        for i in range(n)
    )
    tones = (
        (drive.h0, omega0),
        (0.5 * drive.h0 * drive.xi, omega0 + drive.delta),
        (0.5 * drive.h0 * drive.xi, omega0 - drive.delta),
    )
    for strength, w in tones:
        if strength == 0.0:
            continue
        expr.terms.append(
            Term(
                matrix=strength * splus_tot,
                coeff=lambda t, w=w: np.exp(-1.0j * w * t),
                frequency=w,
            )
        )
        expr.terms.append(
            Term(
                matrix=strength * splus_tot.conj().T,
                coeff=lambda t, w=w: np.exp(1.0j * w * t),
                frequency=w,
            )
        )
    return expr


def build_interaction_hamiltonian(
    modes: NormalModeData,
    drive: DriveSpec,
    n_max: int,
    max_dim: int = MAX_HILBERT_DIM,
) -> OperatorExpr:
    """Interaction-picture Hamiltonian: dressed sideband force oscillating at
    the mode detunings plus the amplitude-modulated carrier
    h0 (1 + xi cos(Delta t)) sum_i sigma_i^x."""
    n = modes.n_ions
    m_modes = len(modes.frequencies)
    _check_dim(n, m_modes, n_max, max_dim)
    expr = OperatorExpr(n_spins=n, n_modes=m_modes, n_max=n_max)

    f = np.real(light_forces(modes, drive))
    delta = mode_detunings(modes, drive)
    sphi = ops.sigma_phase(drive.phi_s)
    spin_parts = [
        sum(
            f[i, k] * ops.embed_spin(ops.spin_site_operator(sphi, i, n), m_modes, n_max)
            for i in range(n)
        )
        for k in range(m_modes)
    ]
    a_single = ops.destroy(n_max)
    em = np.exp(1.0j * drive.phi_m)
    for k in range(m_modes):
        a_full = ops.embed_mode(ops.mode_operator(a_single, k, m_modes, n_max), n)
        p_mat = spin_parts[k] @ (a_full * em + a_full.conj().T * em.conjugate())
        q_mat = spin_parts[k] @ (1.0j * (a_full.conj().T * em.conjugate() - a_full * em))
        expr.terms.append(
            Term(matrix=p_mat, coeff=lambda t, d=delta[k]: np.cos(d * t), frequency=abs(delta[k]))
        )
        expr.terms.append(
            Term(matrix=q_mat, coeff=lambda t, d=delta[k]: np.sin(d * t), frequency=abs(delta[k]))
        )

    if drive.h0 > 0.0:
        x_tot = sum(
            ops.embed_spin(ops.spin_site_operator(ops.SX, i, n), m_modes, n_max)
            for i in range(n)
        )
        expr.terms.append(
            Term(
                matrix=x_tot,
                coeff=lambda t: drive.h0 * (1.0 + drive.xi * np.cos(drive.delta * t)),
                frequency=drive.delta,
            )
        )
    expr.ms_structure = MsStructure(
        forces=f, detunings=delta, phi_m=drive.phi_m, drive=drive, n_max=n_max
    )
    return expr


def frame_unitaries(
    t: float,
    drive: DriveSpec,
    n_spins: int,
    mode_frequencies: Sequence[float] | None = None,
    n_max: int = 0,
    omega0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """(U0, Uhat) at time t.

    Uhat = exp(+i theta(t) sum_i sigma_i^x) with theta = h0 (t + xi
    sin(Delta t)/Delta); U0 = exp(-i t H0) Uhat^dagger. Without mode
    arguments both act on the spin space only (omega0 = 0 drops the
    trivial carrier rotation).
    """
    theta = uhat_phase(t, drive)
    single = np.cos(theta) * ops.ID2 + 1.0j * np.sin(theta) * ops.SX
    uhat = ops.kron_all(*([single] * n_spins))
    if mode_frequencies is None:
        u0_spin = np.diag(
            np.exp(-1.0j * 0.5 * omega0 * t * np.array([1.0, -1.0]))
        )
        u0 = ops.kron_all(*([u0_spin] * n_spins)) @ uhat.conj().T
        return u0, uhat
    m_modes = len(mode_frequencies)
    uhat_full = ops.embed_spin(uhat, m_modes, n_max)
    num = np.arange(n_max + 1, dtype=float)
    diag = np.zeros(1)
    for w in mode_frequencies:  # mode 0 is the most significant factor
        diag = (diag[:, None] + (w * num)[None, :]).ravel()
    u0_spin = np.diag(np.exp(-1.0j * 0.5 * omega0 * t * np.array([1.0, -1.0])))
    u0_ph = np.diag(np.exp(-1.0j * diag * t))
    u0 = np.kron(ops.kron_all(*([u0_spin] * n_spins)), u0_ph) @ uhat_full.conj().T
    return u0, uhat_full


XYZ = "XYZ"
QIM = "QIM"
MODULATED_ISING = "MODULATED_ISING"
LRHM_XXZ = "LRHM_XXZ"


@dataclass(frozen=True)
class EffectiveModelSpec:
    """Parameters of a spin-only effective model.

    kind-specific fields: XYZ uses (jx, jy, jz); QIM uses (j, h0, phi_s,
    field_signs); MODULATED_ISING uses (j, phi_s, h0, delta, xi);
    LRHM_XXZ uses j interpreted as Jt (spin-operator normalization).
    """

    kind: str
    j: np.ndarray | None = None
    jx: np.ndarray | None = None
    jy: np.ndarray | None = None
    jz: np.ndarray | None = None
    h0: float = 0.0
    phi_s: float = 0.0
    delta: float = 0.0
    xi: float = 0.0
    field_signs: np.ndarray | None = None

    @classmethod
    def xyz_from_drive(cls, j: np.ndarray, phi_s: float, xi: float) -> "EffectiveModelSpec":
        jx, jy, jz = xyz_couplings(j, phi_s, xi)
        return cls(kind=XYZ, jx=jx, jy=jy, jz=jz)


def _pair_sum(matrices: Sequence[np.ndarray], j: np.ndarray, n: int) -> np.ndarray:
    dim = matrices[0].shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        for k in range(i + 1, n):
            out += j[i, k] * matrices[i] @ matrices[k]
    return out


def pauli_bilinears(j: np.ndarray, n: int) -> np.ndarray:
    """K[a, b] = sum_{i<j} J_ij sigma_i^a sigma_j^b for a, b in {x, y, z}."""
    singles = {
        a: [ops.spin_site_operator(ops.PAULI[a], i, n) for i in range(n)] for a in "xyz"
    }
    k = np.zeros((3, 3, 2**n, 2**n), dtype=complex)
    for ai, a in enumerate("xyz"):
        for bi, b in enumerate("xyz"):
            dim = 2**n
            acc = np.zeros((dim, dim), dtype=complex)
            for i in range(n):
                for jdx in range(i + 1, n):
                    acc += j[i, jdx] * singles[a][i] @ singles[b][jdx]
            k[ai, bi] = acc
    return k


def build_effective(spec: EffectiveModelSpec, max_dim: int = MAX_HILBERT_DIM) -> OperatorExpr:
    """Spin-only Hermitian operator for the requested effective model."""
    if spec.kind == XYZ:
        mats = [spec.jx, spec.jy, spec.jz]
        if any(m is None for m in mats):
            raise ValueError("XYZ model needs jx, jy, jz")
        shapes = {m.shape for m in mats}
        if len(shapes) != 1 or mats[0].shape[0] != mats[0].shape[1]:
            raise ValueError("inconsistent coupling matrix shapes")
        n = mats[0].shape[0]
        _check_dim(n, 0, 0, max_dim)
        expr = OperatorExpr(n_spins=n, n_modes=0, n_max=0)
        h = np.zeros((2**n, 2**n), dtype=complex)
        for axis, jmat in zip("xyz", mats):
            singles = [ops.spin_site_operator(ops.PAULI[axis], i, n) for i in range(n)]
            h += _pair_sum(singles, jmat, n)
        expr.terms.append(Term(matrix=h))
        return expr

    if spec.kind == QIM:
        if spec.j is None:
            raise ValueError("QIM needs the coupling matrix")
        n = spec.j.shape[0]
        _check_dim(n, 0, 0, max_dim)
        expr = OperatorExpr(n_spins=n, n_modes=0, n_max=0)
        sphi = ops.sigma_phase(spec.phi_s)
        singles = [ops.spin_site_operator(sphi, i, n) for i in range(n)]
        h = _pair_sum(singles, spec.j, n)
        if spec.h0 != 0.0:
            # field axis phi_d = phi_s - pi/2 keeps the stated phase relation
            field_axis = ops.sigma_phase(spec.phi_s - pi / 2.0)
            signs = spec.field_signs if spec.field_signs is not None else np.ones(n)
            h += spec.h0 * sum(
                signs[i] * ops.spin_site_operator(field_axis, i, n) for i in range(n)
            )
        expr.terms.append(Term(matrix=h))
        return expr

    if spec.kind == MODULATED_ISING:
        if spec.j is None:
            raise ValueError("modulated Ising needs the coupling matrix")
        n = spec.j.shape[0]
        _check_dim(n, 0, 0, max_dim)
        if spec.h0 <= 0.0 or spec.delta <= 0.0:
            raise ValueError("modulated Ising needs h0 > 0 and Delta > 0")
        expr = OperatorExpr(n_spins=n, n_modes=0, n_max=0)
        k = pauli_bilinears(spec.j, n)
        drive = _axis_drive(spec)
        for ai in range(3):
            for bi in range(3):
                if np.linalg.norm(k[ai, bi]) == 0.0:
                    continue
                expr.terms.append(
                    Term(
                        matrix=k[ai, bi],
                        coeff=_axis_product_coeff(drive, spec.phi_s, ai, bi),
                        frequency=2.0 * spec.h0 + 2.0 * spec.delta,
                    )
                )
        return expr

    if spec.kind == LRHM_XXZ:
        if spec.j is None:
            raise ValueError("LRHM needs the coupling matrix (spin normalization)")
        n = spec.j.shape[0]
        _check_dim(n, 0, 0, max_dim)
        expr = OperatorExpr(n_spins=n, n_modes=0, n_max=0)
        h = np.zeros((2**n, 2**n), dtype=complex)
        for axis in "xyz":
            singles = [ops.spin_site_operator(ops.PAULI[axis], i, n) for i in range(n)]
            h += 0.25 * _pair_sum(singles, spec.j, n)
        expr.terms.append(Term(matrix=h))
        return expr

    raise ValueError(f"unknown effective model kind {spec.kind!r}")


def _axis_drive(spec: EffectiveModelSpec) -> DriveSpec:
    return DriveSpec(
        omega_l=0.0,
        mu=0.0,
        h0=spec.h0,
        delta=spec.delta,
        xi=spec.xi,
        eta=0.0,
        omega_r=0.0,
        phi_r=spec.phi_s - pi / 2.0,
        phi_b=spec.phi_s - pi / 2.0,
    )


def _axis_product_coeff(drive: DriveSpec, phi_s: float, ai: int, bi: int):
    def coeff(t: float) -> float:
        c = driven_axis(t, drive, phi_s)
        return c[ai] * c[bi]

    return coeff


def driven_axis(t: float, drive: DriveSpec, phi_s: float | None = None) -> np.ndarray:
    """Exact dressed axis (c_x, c_y, c_z) at time t (conjugation form)."""
    if phi_s is None:
        phi_s = drive.phi_s
    theta = uhat_phase(t, drive)
    return np.array(
        [
            np.cos(phi_s),
            -np.sin(phi_s) * np.cos(2.0 * theta),
            np.sin(phi_s) * np.sin(2.0 * theta),
        ]
    )
