"""Basic spin and boson operators with the project-wide basis ordering.

Basis ordering (shared by every module): the full Hilbert space is
spins (x) modes, index = spin_index * (n_max+1)**M + fock_index, where

* spin_index enumerates the 2**N spin product basis with site 0 as the
  most significant bit (kron order: site 0, site 1, ...),
* fock_index enumerates the Fock product basis of the M modes with mode 0
  (lowest frequency) as the most significant factor, Fock quantum numbers
  ascending within each mode.
"""

from __future__ import annotations

import numpy as np

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
SPLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

PAULI = {"x": SX, "y": SY, "z": SZ}


def kron_all(*ops: np.ndarray) -> np.ndarray:
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def sigma_phase(theta: float) -> np.ndarray:
    """sigma^theta = sigma^+ e^{i theta} + H.c. = cos(theta) X - sin(theta) Y."""
    return np.cos(theta) * SX - np.sin(theta) * SY


def spin_site_operator(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Embed a single-site operator into the 2**N spin space."""
    ops = [ID2] * n_spins
    ops[site] = op
    return kron_all(*ops)


def destroy(n_max: int) -> np.ndarray:
    """Annihilation operator on a Fock space truncated at n_max quanta."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


def mode_operator(op: np.ndarray, mode: int, n_modes: int, n_max: int) -> np.ndarray:
    """Embed a single-mode operator into the (n_max+1)**M mode space."""
    eye = np.eye(n_max + 1, dtype=complex)
    ops = [eye] * n_modes
    ops[mode] = op
    return kron_all(*ops)


def embed_spin(op_spin: np.ndarray, n_modes: int, n_max: int) -> np.ndarray:
    return np.kron(op_spin, np.eye((n_max + 1) ** n_modes, dtype=complex))


def embed_mode(op_mode: np.ndarray, n_spins: int) -> np.ndarray:
    return np.kron(np.eye(2**n_spins, dtype=complex), op_mode)


def spin_product_state(kets: list[np.ndarray]) -> np.ndarray:
    psi = np.asarray(kets[0], dtype=complex)
    for k in kets[1:]:
        psi = np.kron(psi, k)
    return psi


KET_PLUS_Y = np.array([1.0, 1.0j]) / np.sqrt(2.0)
KET_MINUS_Y = np.array([1.0, -1.0j]) / np.sqrt(2.0)
KET_PLUS_X = np.array([1.0, 1.0]) / np.sqrt(2.0)
KET_MINUS_X = np.array([1.0, -1.0]) / np.sqrt(2.0)
