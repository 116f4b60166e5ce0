"""Ion-chain equilibrium positions and transverse normal modes.

Lengths are measured in units of l_z = (e^2 / 4 pi eps0 m omega_z^2)^(1/3)
unless stated otherwise; all frequencies are angular (rad/s).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import atomic_mass, elementary_charge, epsilon_0, pi

COULOMB = elementary_charge**2 / (4.0 * pi * epsilon_0)

YB171_MASS = 170.936 * atomic_mass


class EquilibriumSolverError(RuntimeError):
    """Newton iteration for the equilibrium positions did not converge."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"equilibrium solver stalled at residual {residual:.3e} "
            f"after {iterations} iterations"
        )


class ZigZagInstabilityError(RuntimeError):
    """Transverse confinement too weak for a linear chain."""

    def __init__(self, ratio: float):
        self.ratio = ratio
        super().__init__(
            f"negative transverse eigenvalue: omega_x/omega_z = {ratio:.4f} "
            "is below the linear-to-zigzag threshold for this ion number"
        )


@dataclass(frozen=True)
class CrystalConfig:
    """Linear Paul-trap settings for an N-ion chain."""

    n_ions: int
    omega_z: float  # axial angular frequency (rad/s)
    omega_x: float  # transverse angular frequency (rad/s)
    mass: float = YB171_MASS  # ion mass (kg)

    def __post_init__(self):
        if self.n_ions < 2:
            raise ValueError("need at least two ions")
        if not (self.omega_x > self.omega_z > 0):
            raise ValueError("linear-chain regime requires omega_x > omega_z > 0")

    @property
    def length_scale(self) -> float:
        """l_z in meters."""
        return (COULOMB / (self.mass * self.omega_z**2)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class NormalModeData:
    """Equilibrium positions plus the transverse phonon band.

    displacements[i, n] is the amplitude of ion i in mode n; columns are
    sorted by ascending frequency. For the periodic model the matrix is
    complex (plane waves), for the exact chain it is real orthogonal.
    """

    positions: np.ndarray  # dimensionless u_j, ascending
    frequencies: np.ndarray  # omega_{n,x} (rad/s), ascending
    displacements: np.ndarray  # N x N
    a0: float  # minimum neighbor spacing (m)
    beta_x: float  # Coulomb/trap stiffness at spacing a0
    omega_tilde_x: float  # renormalized trap frequency (rad/s)
    config: CrystalConfig | None = field(default=None, compare=False)

    @property
    def n_ions(self) -> int:
        return len(self.positions)


def equilibrium_force(u: np.ndarray) -> np.ndarray:
    """Dimensionless force residual u_j - sum_k sgn(u_j-u_k)/(u_j-u_k)^2."""
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def solve_equilibrium(
    config: CrystalConfig,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> np.ndarray:
    """Solve the dimensionless equilibrium positions of a linear chain.

    Newton iteration on the force residual, seeded with a uniform lattice
    of spacing 2.018/N^0.559; steps are damped whenever the residual would
    grow. Returns u_1 < ... < u_N in units of l_z.
    """
    n = config.n_ions
    u = (np.arange(n) - (n - 1) / 2.0) * (2.018 / n**0.559)
    res = np.max(np.abs(equilibrium_force(u)))
    for iteration in range(max_iter):
        if res < tol:
            break
        d = u[:, None] - u[None, :]
        np.fill_diagonal(d, np.inf)
        jac = np.diag(1.0 + np.sum(2.0 / np.abs(d) ** 3, axis=1)) - 2.0 / np.abs(d) ** 3
        step = np.linalg.solve(jac, equilibrium_force(u))
        scale = 1.0
        while scale > 1e-4:
            trial = u - scale * step
            trial_res = np.max(np.abs(equilibrium_force(trial)))
            if trial_res < res or not np.isfinite(res):
                u, res = trial, trial_res
                break
            scale /= 2.0
        else:
            raise EquilibriumSolverError(res, iteration)
    else:
        raise EquilibriumSolverError(res, max_iter)
    return np.sort(u)


def stiffness_matrix(config: CrystalConfig, positions: np.ndarray) -> np.ndarray:
    """Transverse Hessian K_ij (rad^2/s^2) at the equilibrium positions."""
    d = np.abs(positions[:, None] - positions[None, :])
    np.fill_diagonal(d, np.inf)
    inv3 = 1.0 / d**3
    k = config.omega_z**2 * inv3
    np.fill_diagonal(k, config.omega_x**2 - config.omega_z**2 * inv3.sum(axis=1))
    return k


def _periodic_coeffs(n: int) -> tuple[np.ndarray, np.ndarray]:
    d = np.arange(1, n // 2 + 1)
    c = np.ones(n // 2)
    c[-1] = 0.5
    return d, c


def transverse_modes(config: CrystalConfig, positions: np.ndarray) -> NormalModeData:
    """Diagonalize the transverse stiffness matrix of the exact chain.

    The highest mode is the center-of-mass mode at omega_x; a negative
    eigenvalue signals the linear-to-zigzag instability.
    """
    residual = np.max(np.abs(equilibrium_force(positions)))
    if residual > 1e-10:
        raise ValueError(f"positions do not solve the equilibrium (residual {residual:.2e})")
    k = stiffness_matrix(config, positions)
    w2, modes = np.linalg.eigh(k)
    if w2[0] <= 0.0:
        raise ZigZagInstabilityError(config.omega_x / config.omega_z)
    lz = config.length_scale
    a0 = float(np.min(np.diff(positions)) * lz)
    beta = COULOMB / (config.mass * config.omega_x**2 * a0**3)
    d, c = _periodic_coeffs(config.n_ions)
    arg = 1.0 - 2.0 * beta * np.sum(c / d**3)
    omega_tilde = config.omega_x * np.sqrt(arg) if arg > 0 else float("nan")
    return NormalModeData(
        positions=positions,
        frequencies=np.sqrt(w2),
        displacements=modes,
        a0=a0,
        beta_x=beta,
        omega_tilde_x=omega_tilde,
        config=config,
    )


def periodic_modes(
    n_ions: int,
    a0: float,
    beta_x: float,
    omega_x: float,
) -> NormalModeData:
    """Plane-wave transverse modes of the homogeneous periodic chain.

    Mode n has displacement M_jn = exp(i q a0 j)/sqrt(N) with
    q = 2 pi n / (N a0); frequencies follow the cosine band built from the
    dipolar couplings c_d/d^3 on top of the renormalized trap frequency.
    """
    if n_ions % 2 != 0:
        raise ValueError("periodic model requires even N")
    d, c = _periodic_coeffs(n_ions)
    s_d = np.sum(c / d**3)
    arg = 1.0 - 2.0 * beta_x * s_d
    if arg <= 0.0:
        raise ZigZagInstabilityError(float("nan"))
    omega_tilde = omega_x * np.sqrt(arg)
    q = 2.0 * pi * np.arange(n_ions) / n_ions  # q a0 on the Brillouin zone
    band = omega_tilde**2 + 2.0 * beta_x * omega_x**2 * (np.cos(np.outer(q, d)) @ (c / d**3))
    if np.any(band <= 0.0):
        raise ZigZagInstabilityError(float("nan"))
    freqs = np.sqrt(band)
    modes = np.exp(1.0j * np.outer(np.arange(n_ions), q)) / np.sqrt(n_ions)
    order = np.argsort(freqs)
    positions = np.arange(n_ions, dtype=float)  # homogeneous lattice, units of a0
    return NormalModeData(
        positions=positions,
        frequencies=freqs[order],
        displacements=modes[:, order],
        a0=a0,
        beta_x=beta_x,
        omega_tilde_x=omega_tilde,
    )


def chain_modes(config: CrystalConfig) -> NormalModeData:
    """Convenience: equilibrium plus transverse modes in one call."""
    return transverse_modes(config, solve_equilibrium(config))


def write_modes_csv(path, data: NormalModeData) -> None:
    """Emit (index, u_j, omega_n/2pi) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "u_j", "omega_n_hz"])
        for j in range(data.n_ions):
            writer.writerow(
                [j + 1, f"{data.positions[j]:.12g}", f"{data.frequencies[j] / (2 * pi):.12g}"]
            )
