"""Haar-averaged channel fidelity between exact and effective dynamics.

The exact spin-phonon evolution defines a spin channel by tracing the
phonons over a thermal input; its Kraus operators in the Fock basis are
K_ab = sqrt(p_a) <b|U(t)|a>. The average fidelity against a target
unitary follows the closed form (sum_k |Tr(U_eff^dag K_k)|^2 + d) /
(d^2 + d) with d the spin dimension; no sampling is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import operators as ops
from .couplings import DriveSpec
from .evolution import ThermalEnsemble, Trajectory, propagate
from .hamiltonians import OperatorExpr, uhat_phase


class ChannelCompletenessError(ValueError):
    def __init__(self, defect: float, threshold: float):
        self.defect = defect
        super().__init__(
            f"Kraus completeness defect {defect:.3e} above threshold {threshold:.1e}; "
            "increase the Fock cutoff or check unitarity of the evolution"
        )


@dataclass(frozen=True)
class SpinChannel:
    """Kraus representation of the phonon-traced spin dynamics at one time."""

    kraus: np.ndarray  # (K, d, d)
    completeness_defect: float

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for k in self.kraus:
            out += k @ rho @ k.conj().T
        return out


def channel_from_evolution(
    u_full: np.ndarray,
    thermal: ThermalEnsemble,
    n_spins: int,
    defect_threshold: float = 1e-8,
) -> SpinChannel:
    """Kraus set K_ab = sqrt(p_a) <b|U|a> over the Fock indices.

    ``u_full`` is the evolution operator on the full spin (x) mode space.
    The channel is trace preserving up to the unitarity drift of ``u_full``
    and the (renormalized) thermal weights.
    """
    nph_dim = (thermal.n_max + 1) ** thermal.n_modes
    d = 2**n_spins
    u = u_full.reshape(d, nph_dim, d, nph_dim)
    kraus = []
    for a, p in zip(thermal.fock_indices, thermal.weights):
        block = u[:, :, :, a]  # [s', b, s]
        for b in range(nph_dim):
            kraus.append(np.sqrt(p) * block[:, b, :])
    kraus = np.array(kraus)
    gram = np.einsum("kij,kil->jl", kraus.conj(), kraus)
    defect = float(np.linalg.norm(gram - np.eye(d)))
    if defect > defect_threshold:
        raise ChannelCompletenessError(defect, defect_threshold)
    return SpinChannel(kraus=kraus, completeness_defect=defect)


def haar_average_fidelity(channel: SpinChannel, u_eff: np.ndarray) -> float:
    """Exact Haar-averaged fidelity of the channel against a target unitary."""
    d = channel.dim
    if u_eff.shape != (d, d):
        raise ValueError("dimension mismatch between channel and target unitary")
    traces = np.einsum("ij,kij->k", u_eff.conj(), channel.kraus)
    return float((np.sum(np.abs(traces) ** 2) + d) / (d**2 + d))


def haar_fidelity_montecarlo(
    channel: SpinChannel,
    u_eff: np.ndarray,
    n_samples: int = 10_000,
    seed: int = 7,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the Haar average (oracle for the closed form).

    Samples Haar-random pure states and returns (mean, standard error).
    """
    rng = np.random.default_rng(seed)
    d = channel.dim
    vals = np.empty(n_samples)
    for n in range(n_samples):
        psi = rng.standard_normal(d) + 1.0j * rng.standard_normal(d)
        psi /= np.linalg.norm(psi)
        target = u_eff @ psi
        amps = channel.kraus @ psi
        vals[n] = float(np.sum(np.abs(amps @ target.conj()) ** 2))
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))


def effective_unitary(t: float, drive: DriveSpec, h_spin: np.ndarray) -> np.ndarray:
    """Interaction-picture target: inverse drive dressing times exp(-i H t)."""
    n_spins = int(np.log2(h_spin.shape[0]))
    theta = uhat_phase(t, drive)
    single = np.cos(theta) * ops.ID2 - 1.0j * np.sin(theta) * ops.SX
    dressing = ops.kron_all(*([single] * n_spins))
    return dressing @ sla.expm(-1.0j * h_spin * t)


def unitary_columns(
    thermal: ThermalEnsemble, n_spins: int
) -> tuple[np.ndarray, np.ndarray]:
    """Initial basis columns |s> (x) |a> for every kept thermal occupation.

    Columns are ordered spin-major: col = s * K + index(a). Propagating this
    block yields exactly the matrix elements the channel fidelity needs.
    """
    nph_dim = (thermal.n_max + 1) ** thermal.n_modes
    dim = 2**n_spins * nph_dim
    k = len(thermal.fock_indices)
    cols = np.zeros((dim, 2**n_spins * k), dtype=complex)
    for s in range(2**n_spins):
        for ia, a in enumerate(thermal.fock_indices):
            cols[s * nph_dim + a, s * k + ia] = 1.0
    return cols, thermal.weights


def fidelity_series(
    traj: Trajectory,
    thermal: ThermalEnsemble,
    n_spins: int,
    u_eff_at,
) -> np.ndarray:
    """Haar-averaged fidelity at every trajectory time.

    ``traj`` must hold the evolution of :func:`unitary_columns`;
    ``u_eff_at(t)`` returns the target spin unitary.
    """
    d = 2**n_spins
    k = len(thermal.fock_indices)
    nph_dim = (thermal.n_max + 1) ** thermal.n_modes
    out = np.empty(len(traj.times))
    for idx, t in enumerate(traj.times):
        block = traj.states[idx].reshape(d, nph_dim, d, k)  # [s', b, s, a]
        u_eff = u_eff_at(t)
        tba = np.einsum("ks,kbsa->ba", u_eff.conj(), block)
        out[idx] = (np.sum(thermal.weights[None, :] * np.abs(tba) ** 2) + d) / (d**2 + d)
    return out


def time_averaged_error(times: np.ndarray, fbar: np.ndarray, t_f: float | None = None) -> float:
    """epsilon_bar = (1/t_f) integral of (1 - Fbar) dt by the trapezoid rule."""
    times = np.asarray(times, dtype=float)
    fbar = np.asarray(fbar, dtype=float)
    if t_f is None:
        t_f = times[-1] - times[0]
    return float(np.trapezoid(1.0 - fbar, times) / t_f)


def channel_error(
    h_expr: OperatorExpr,
    drive: DriveSpec,
    thermal: ThermalEnsemble,
    h_target: np.ndarray,
    t_f: float,
    n_times: int = 81,
    phase_budget: float = 0.5,
    include_t0: bool = True,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Full pipeline: propagate the channel columns and score against a target.

    Returns (times, Fbar(t), epsilon_bar) over [0, t_f].
    """
    n_spins = h_expr.n_spins
    cols, _ = unitary_columns(thermal, n_spins)
    t_grid = np.linspace(0.0, t_f, n_times)
    traj = propagate(h_expr, cols, t_grid, phase_budget=phase_budget)
    fbar = fidelity_series(
        traj, thermal, n_spins, lambda t: effective_unitary(t, drive, h_target)
    )
    times = traj.times
    if include_t0:
        times = np.concatenate([[0.0], times])
        fbar = np.concatenate([[1.0], fbar])
    eps = time_averaged_error(times, fbar, t_f)
    return times, fbar, eps
