"""Phonon-mediated spin-spin couplings and drive-parameter validation.

All frequencies are angular (rad/s). The mode-sum coupling uses the
symmetric beatnote mu of the two sideband beams (omega_b = omega0 + mu,
omega_r = omega0 - mu); per-mode detunings are delta_n = omega_n - mu.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import pi
from scipy.special import jv

from .ion_crystal import NormalModeData


class ResonanceError(ValueError):
    """The drive beatnote sits on a vibrational mode."""

    def __init__(self, mode: int, frequency: float):
        self.mode = mode
        super().__init__(
            f"beatnote resonant with mode {mode} at {frequency / (2 * pi):.6g} Hz"
        )


class CouplingValidityError(ValueError):
    """The analytic coupling expansion does not converge (|lambda| >= 1)."""

    def __init__(self, lam: float):
        self.lam = lam
        super().__init__(
            f"proximity parameter lambda = {lam:.4f} outside (-1, 1); the force "
            "sits inside or too close to the vibrational band"
        )


@dataclass(frozen=True)
class DriveSpec:
    """Mølmer-Sørensen force plus three-tone carrier parameters."""

    omega_l: float  # MS carrier Rabi frequency (rad/s)
    mu: float  # symmetric MS beatnote offset from the carrier (rad/s)
    h0: float  # resonant-tone half Rabi frequency (rad/s)
    delta: float  # tone detuning of the +/- carrier tones (rad/s)
    xi: float  # sideband-tone ratio, dimensionless
    eta: float  # Lamb-Dicke parameter at the trap frequency
    omega_r: float  # recoil energy (rad/s), eta^2 * omega_x
    phi_r: float = 0.0  # red-sideband beam phase
    phi_b: float = 0.0  # blue-sideband beam phase

    def __post_init__(self):
        if not 0.0 <= self.xi < 0.5:
            raise ValueError("tone ratio must satisfy 0 <= xi < 1/2")
        if self.h0 < 0 or self.delta <= 0:
            raise ValueError("h0 must be >= 0 and Delta > 0")
        object.__setattr__(self, "phi_r", self.phi_r % (2 * pi))
        object.__setattr__(self, "phi_b", self.phi_b % (2 * pi))

    @property
    def phi_s(self) -> float:
        """Spin phase (phi_r + phi_b)/2 + pi/2."""
        return ((self.phi_r + self.phi_b) / 2.0 + pi / 2.0) % (2 * pi)

    @property
    def phi_m(self) -> float:
        """Motional phase (phi_r - phi_b)/2."""
        return ((self.phi_r - self.phi_b) / 2.0) % (2 * pi)

    @classmethod
    def from_spin_phase(
        cls,
        phi_s: float,
        *,
        omega_l: float,
        mu: float,
        h0: float,
        delta: float,
        xi: float,
        eta: float,
        omega_x: float,
        phi_m: float = 0.0,
    ) -> "DriveSpec":
        """Build a spec with beam phases realizing the requested spin phase."""
        return cls(
            omega_l=omega_l,
            mu=mu,
            h0=h0,
            delta=delta,
            xi=xi,
            eta=eta,
            omega_r=eta**2 * omega_x,
            phi_r=(phi_s + phi_m - pi / 2.0),
            phi_b=(phi_s - phi_m - pi / 2.0),
        )


@dataclass(frozen=True)
class CouplingSet:
    """Spin-spin couplings with the analytic scale parameters."""

    j_matrix: np.ndarray  # symmetric, zero diagonal (rad/s)
    j0: float  # overall scale (rad/s)
    lam: float  # proximity parameter
    xi0: float  # exponential decay length (m)
    jx: np.ndarray = field(default=None)
    jy: np.ndarray = field(default=None)
    jz: np.ndarray = field(default=None)


def mode_detunings(modes: NormalModeData, drive: DriveSpec) -> np.ndarray:
    """delta_n = omega_n - mu for every mode."""
    return modes.frequencies - drive.mu


def light_forces(
    modes: NormalModeData,
    drive: DriveSpec,
    include_debye_waller: bool = False,
) -> np.ndarray:
    """Force amplitudes f_in = F_in x0 (rad/s) for every ion and mode.

    f_in = (Omega_L/2) eta sqrt(omega_x/omega_n) M_in; the Debye-Waller
    factor exp(-1/2 sum_n M_in^2 eta_n^2) is off by default, matching the
    small-eta mode-sum coupling.
    """
    omega_x = modes.frequencies.max()
    scale = 0.5 * drive.omega_l * drive.eta * np.sqrt(omega_x / modes.frequencies)
    f = scale[None, :] * modes.displacements
    if include_debye_waller:
        eta_n2 = drive.eta**2 * omega_x / modes.frequencies
        dw = np.exp(-0.5 * (np.abs(modes.displacements) ** 2 * eta_n2[None, :]).sum(axis=1))
        f = f * dw[:, None]
    return f


def coupling_matrix_numeric(modes: NormalModeData, drive: DriveSpec) -> np.ndarray:
    """Exact mode-sum spin-spin couplings (rad/s).

    J_ij = (|Omega_L|^2 / 2) omega_R sum_n M_in M*_jn / (mu^2 - omega_n^2)
    plus the complex conjugate.
    """
    gaps = drive.mu**2 - modes.frequencies**2
    rel = np.abs(modes.frequencies - drive.mu) / modes.frequencies
    if np.any(rel < 1e-9):
        n = int(np.argmin(rel))
        raise ResonanceError(n, modes.frequencies[n])
    m = modes.displacements
    s = (m / gaps[None, :]) @ m.conj().T
    j = 0.5 * drive.omega_l**2 * drive.omega_r * (s + s.conj())
    j = np.real(j)
    np.fill_diagonal(j, 0.0)
    return j


def coupling_matrix_sideband_limit(modes: NormalModeData, drive: DriveSpec) -> np.ndarray:
    """Resolved-sideband form J_ij = -sum_n f_in f*_jn / delta_n + c.c."""
    delta = mode_detunings(modes, drive)
    f = light_forces(modes, drive)
    s = (f / delta[None, :]) @ f.conj().T
    j = -np.real(s + s.conj()) / 2.0 * 2.0  # c.c. doubles the real part
    np.fill_diagonal(j, 0.0)
    return j


def coupling_params(drive: DriveSpec, modes: NormalModeData) -> tuple[float, float, float]:
    """Scale J0, proximity lambda and decay length xi0 of the periodic model."""
    wt2 = modes.omega_tilde_x**2
    gap = drive.mu**2 - wt2
    if gap == 0.0:
        raise ResonanceError(-1, modes.omega_tilde_x)
    omega_x = modes.config.omega_x if modes.config is not None else modes.frequencies.max()
    j0 = 0.5 * drive.omega_l**2 * drive.omega_r / gap
    lam = 2.0 * modes.beta_x * omega_x**2 / gap
    if abs(lam) >= 1.0:
        raise CouplingValidityError(lam)
    xi0 = -modes.a0 / np.log((1.0 - np.sqrt(1.0 - lam**2)) / abs(lam))
    return j0, lam, xi0


def coupling_analytic(
    r: int,
    n_ions: int,
    j0: float,
    lam: float,
    xi0: float,
    a0: float,
) -> float:
    """Closed-form bulk coupling J_r = J_r^(1) + J_r^(2) of the periodic model.

    Valid for |lambda| < 1 and 1 <= r <= N/2; both detuning branches enter
    through sgn(lambda).
    """
    if abs(lam) >= 1.0:
        raise CouplingValidityError(lam)
    if not 1 <= r <= n_ions // 2:
        raise ValueError("need 1 <= r <= N/2")
    s = 1.0 if lam >= 0 else -1.0
    decay = a0 / xi0
    j1 = 2.0 * abs(j0) * s ** (1 + abs(r)) * np.exp(-abs(r) * decay)
    j2 = 0.0
    if r >= 2:
        one = 1.0 - lam**2
        for dr in range(2 - r, n_ions // 2 - r + 1):
            rp = r + dr
            if rp < 1:
                continue
            cd = 0.5 if rp == n_ions // 2 else 1.0
            j2 += (
                abs(j0 * lam)
                * s ** (1 + abs(dr))
                * cd
                / abs(rp) ** 3
                * (np.sqrt(one) + abs(dr) * one)
                / one**2
                * np.exp(-abs(dr) * decay)
            )
    return j1 + j2


def coupling_small_lambda(
    r: int,
    j0: float,
    lam: float,
    xi0: float,
    a0: float,
) -> float:
    """Leading small-|lambda| form: dipolar tail plus exponential correction."""
    s = 1.0 if lam >= 0 else -1.0
    value = abs(j0 * lam) / abs(r) ** 3
    if r >= 2:
        value += 2.0 * abs(j0) * s ** (1 + abs(r)) * np.exp(-abs(r) * a0 / xi0)
    return value


def xyz_couplings(
    j_matrix: np.ndarray, phi_s: float, xi: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Anisotropic couplings J^x, J^y, J^z generated by the three-tone drive."""
    if not 0.0 <= xi < 0.5:
        raise ValueError("tone ratio must satisfy 0 <= xi < 1/2")
    b1 = jv(1, xi)
    jx = j_matrix * np.cos(phi_s) ** 2
    jy = 0.5 * j_matrix * np.sin(phi_s) ** 2 * (1.0 - b1)
    jz = 0.5 * j_matrix * np.sin(phi_s) ** 2 * (1.0 + b1)
    return jx, jy, jz


def bessel_m_max(x: float, tol: float = 1e-12) -> int:
    """Smallest truncation with sum_{|m|>m_max} J_m(x)^2 below tol.

    Uses the bound |J_m(x)| <= (x/2)^m / m! for m > x.
    """
    x = abs(x)
    m = max(1, int(np.ceil(x)))
    while True:
        tail = (x / 2.0) ** m / math.factorial(m) if m < 150 else 0.0
        if 2.0 * tail**2 < tol:
            return m
        m += 1


@dataclass(frozen=True)
class ResidualCoupling:
    """Residual spin-phonon strengths lambda_in from the comb sum."""

    total: np.ndarray  # (N, M) full m-sum
    m0_estimate: np.ndarray  # (N, M) single-term estimate
    m_max: int
    flagged: list  # (m, mode) pairs whose denominator is near-resonant


def residual_spin_phonon(
    drive: DriveSpec,
    modes: NormalModeData,
    m_max: int | None = None,
) -> ResidualCoupling:
    """Residual spin-phonon coupling strength per ion and mode.

    lambda_in = sin^2(phi_s) f_in^2 sum_m J_m(h0 xi / Delta)^2
                (m Delta + 2 h0) / (delta_n^2 - (m Delta + 2 h0)^2),
    with the m = 0 term also returned as the paper-style estimate
    sin^2(phi_s) f_in^2 J_0^2 * 2 h0 / delta_n^2. Near-resonant
    denominators are flagged, not raised.
    """
    x = drive.h0 * drive.xi / drive.delta
    if m_max is None:
        m_max = bessel_m_max(x)
    f = np.real(light_forces(modes, drive))
    delta = mode_detunings(modes, drive)
    pref = np.sin(drive.phi_s) ** 2 * f**2
    total = np.zeros_like(pref)
    flagged = []
    for m in range(-m_max, m_max + 1):
        nu = m * drive.delta + 2.0 * drive.h0
        denom = delta**2 - nu**2
        close = np.abs(denom) < 0.05 * delta**2
        if np.any(close):
            flagged.extend((m, int(n)) for n in np.nonzero(close)[0])
            denom = np.where(close, np.inf, denom)
        total += jv(m, x) ** 2 * nu / denom[None, :]
    total = pref * total
    m0 = pref * jv(0, x) ** 2 * 2.0 * drive.h0 / delta[None, :] ** 2
    return ResidualCoupling(total=total, m0_estimate=m0, m_max=m_max, flagged=flagged)


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float  # dimensionless margin; pass iff ratio <= threshold
    threshold: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class RegimeReport:
    checks: list
    comb_flags: list  # (m, mode, nu, delta_n, suppression)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{status:4s}  {c.name:24s} ratio={c.ratio:.3g} (<= {c.threshold:g}) {c.detail}")
        for m, n, nu, dn, sup in self.comb_flags:
            lines.append(
                f"flag  comb m={m:+d} near mode {n}: |nu|={nu / (2 * pi):.4g} Hz vs "
                f"delta_n={dn / (2 * pi):.4g} Hz, suppression {sup:.2e}"
            )
        return "\n".join(lines)


HIERARCHY_RATIO = 0.1  # operational reading of "much less than"


def validate_regime(
    drive: DriveSpec,
    modes: NormalModeData,
    j_matrix: np.ndarray | None = None,
    nbar: np.ndarray | float = 0.0,
) -> RegimeReport:
    """Check every inequality required for the effective XYZ description.

    Each "much less than" is scored as a ratio that must stay below 0.1;
    the tone condition Delta = 4 h0 is an equality with relative margin.
    The comb scan flags drive harmonics 2 h0 + m Delta landing near a
    sideband detuning together with their Bessel suppression.
    """
    if j_matrix is None:
        j_matrix = coupling_matrix_numeric(modes, drive)
    delta = np.abs(mode_detunings(modes, drive))
    nbar = np.broadcast_to(np.asarray(nbar, dtype=float), delta.shape)
    f = np.abs(light_forces(modes, drive))
    checks = []

    ratio = float(np.max(f * np.sqrt(1.0 + nbar)[None, :] / delta[None, :]))
    checks.append(
        RegimeCheck("force_vs_detuning", ratio, HIERARCHY_RATIO, ratio <= HIERARCHY_RATIO)
    )
    dmin = float(delta.min())
    for name, value in (("h0_vs_detuning", drive.h0), ("tone_vs_detuning", drive.delta)):
        ratio = value / dmin
        checks.append(RegimeCheck(name, ratio, HIERARCHY_RATIO, ratio <= HIERARCHY_RATIO))
    ratio = float(np.max(delta / modes.frequencies))
    checks.append(
        RegimeCheck("detuning_vs_band", ratio, HIERARCHY_RATIO, ratio <= HIERARCHY_RATIO)
    )
    checks.append(RegimeCheck("tone_ratio_xi", drive.xi / 0.5, 1.0, drive.xi < 0.5))
    jmax = float(np.max(np.abs(j_matrix)))
    if drive.h0 > 0:
        ratio = jmax / (2.0 * drive.h0)
        checks.append(
            RegimeCheck("coupling_vs_drive", ratio, HIERARCHY_RATIO, ratio <= HIERARCHY_RATIO)
        )
        margin = abs(drive.delta / (4.0 * drive.h0) - 1.0)
        checks.append(
            RegimeCheck(
                "xyz_tone_condition",
                margin,
                1e-9,
                margin <= 1e-9,
                detail="requires Delta = 4 h0",
            )
        )
    else:
        checks.append(
            RegimeCheck("coupling_vs_drive", np.inf, HIERARCHY_RATIO, False, "h0 = 0")
        )
        checks.append(
            RegimeCheck("xyz_tone_condition", np.inf, 1e-9, False, "h0 = 0")
        )

    x = 2.0 * drive.xi * drive.h0 / drive.delta
    comb_flags = []
    j0x = abs(jv(0, x))
    for m in range(-bessel_m_max(x) - 2, bessel_m_max(x) + 3):
        nu = abs(2.0 * drive.h0 + m * drive.delta)
        for n, dn in enumerate(delta):
            if abs(nu - dn) < drive.delta / 2.0:
                suppression = abs(jv(m, x)) / j0x if j0x > 0 else np.inf
                comb_flags.append((m, n, nu, dn, suppression))
    unsuppressed = [fl for fl in comb_flags if fl[4] > HIERARCHY_RATIO]
    checks.append(
        RegimeCheck(
            "comb_resonances",
            float(max((fl[4] for fl in comb_flags), default=0.0)),
            HIERARCHY_RATIO,
            not unsuppressed,
            detail=f"{len(comb_flags)} flagged",
        )
    )
    return RegimeReport(checks=checks, comb_flags=comb_flags)


def write_coupling_profile_csv(
    path,
    modes: NormalModeData,
    drive: DriveSpec,
    r_max: int | None = None,
    center: int | None = None,
) -> None:
    """Emit the bulk coupling profile: numeric, analytic and dipolar columns."""
    n = modes.n_ions
    if center is None:
        center = n // 2 - 1
    if r_max is None:
        r_max = n // 2
    j_num = coupling_matrix_numeric(modes, drive)
    j0, lam, xi0 = coupling_params(drive, modes)
    j1 = j_num[center, center + 1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "distance_m", "j_ratio_numeric", "j_ratio_analytic", "dipolar"])
        lz = modes.config.length_scale if modes.config is not None else modes.a0
        for r in range(1, r_max + 1):
            dist = abs(modes.positions[center + r] - modes.positions[center]) * lz
            ja = coupling_analytic(r, n, j0, lam, xi0, modes.a0)
            ja1 = coupling_analytic(1, n, j0, lam, xi0, modes.a0)
            writer.writerow(
                [
                    r,
                    f"{dist:.6e}",
                    f"{j_num[center, center + r] / j1:.8e}",
                    f"{ja / ja1:.8e}",
                    f"{1.0 / r**3:.8e}",
                ]
            )
