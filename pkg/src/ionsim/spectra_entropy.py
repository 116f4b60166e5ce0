"""Exact diagonalization, block entropies and central-charge fits.

Ground states of Heisenberg-type chains are computed in the zero-
magnetization sector (a symmetry checked on the couplings, not assumed);
entropies use the natural logarithm, matching the open-chain scaling
S_l = (c/6) y_l + a with y_l = log((2N/pi) sin(pi l / N)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import pi
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import eigsh

from .hamiltonians import OperatorExpr


class EigensolverError(RuntimeError):
    pass


def sz_basis(n_sites: int, n_up: int) -> np.ndarray:
    """All bitstring states with the given number of up spins, ascending."""
    states = [s for s in range(1 << n_sites) if bin(s).count("1") == n_up]
    return np.array(states, dtype=np.int64)


def heisenberg_sector_hamiltonian(
    j_tilde: np.ndarray, n_sites: int, n_up: int | None = None
) -> tuple[csr_matrix, np.ndarray]:
    """Sparse sum_{i<j} Jt_|i-j| S_i . S_j restricted to an S^z sector.

    ``j_tilde`` holds the translationally invariant couplings Jt_r at
    index r (entry 0 ignored). Bit i of a basis state is the spin at
    site i; site 0 is the most significant bit of the full-space index.
    """
    if n_up is None:
        n_up = n_sites // 2
    states = sz_basis(n_sites, n_up)
    index = {int(s): k for k, s in enumerate(states)}
    dim = len(states)
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    # site i occupies bit (n_sites - 1 - i) so that bitstring order matches
    # the kron ordering of the full space
    bit = [n_sites - 1 - i for i in range(n_sites)]
    for k, s in enumerate(states):
        s = int(s)
        for i in range(n_sites):
            si = (s >> bit[i]) & 1
            for j in range(i + 1, n_sites):
                jt = j_tilde[j - i] if j - i < len(j_tilde) else 0.0
                if jt == 0.0:
                    continue
                sj = (s >> bit[j]) & 1
                diag[k] += 0.25 * jt * (2 * si - 1) * (2 * sj - 1)
                if si != sj:
                    s2 = s ^ (1 << bit[i]) ^ (1 << bit[j])
                    rows.append(index[s2])
                    cols.append(k)
                    vals.append(0.5 * jt)
    h = csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    h = h + csr_matrix((diag, (np.arange(dim), np.arange(dim))), shape=(dim, dim))
    return h, states


def lrhm_ground_state(
    j_tilde: np.ndarray,
    n_sites: int,
    tol: float = 0.0,
    residual_tol: float = 1e-10,
) -> tuple[float, np.ndarray]:
    """Ground state of the long-range Heisenberg chain on 2**N amplitudes.

    Solves the S^z = 0 sector with an iterative sparse eigensolver and
    embeds the eigenvector back into the full space. The Lanczos residual
    is verified against ``residual_tol``.
    """
    if n_sites > 20:
        raise ValueError("desk-scale diagonalization is limited to N <= 20")
    h, states = heisenberg_sector_hamiltonian(j_tilde, n_sites)
    if h.shape[0] == 1:
        energy = float(h[0, 0])
        vec = np.array([1.0])
    else:
        try:
            w, v = eigsh(h, k=1, which="SA", tol=tol, maxiter=20000)
        except Exception as exc:  # pragma: no cover - solver failure path
            raise EigensolverError(f"sparse eigensolver failed: {exc}") from exc
        energy, vec = float(w[0]), v[:, 0]
        residual = np.linalg.norm(h @ vec - energy * vec)
        if residual > residual_tol * max(1.0, abs(energy)):
            raise EigensolverError(
                f"Ritz residual {residual:.2e} above {residual_tol:.0e}"
            )
    psi = np.zeros(1 << n_sites)
    psi[states] = vec
    return energy, psi


def ground_state(h_expr: OperatorExpr, residual_tol: float = 1e-10) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a static spin-only operator expression.

    Exploits the total-S^z sector when the commutator with sum sigma^z
    vanishes (checked numerically); intended for moderate N where the
    dense matrix is affordable.
    """
    h = h_expr(0.0)
    n = h_expr.n_spins
    sz_tot = np.zeros(h.shape[0])
    for i in range(2**n):
        sz_tot[i] = n - 2 * bin(i).count("1")
    commutes = np.allclose(h * sz_tot[None, :], sz_tot[:, None] * h, atol=1e-12)
    if commutes:
        best = (np.inf, None)
        for n_up in range(n + 1):
            sector = np.nonzero(np.isclose(sz_tot, n - 2 * n_up))[0]
            hs = h[np.ix_(sector, sector)]
            w, v = np.linalg.eigh(hs)
            if w[0] < best[0]:
                vec = np.zeros(h.shape[0], dtype=complex)
                vec[sector] = v[:, 0]
                best = (float(w[0]), vec)
        energy, psi = best
    else:
        w, v = np.linalg.eigh(h)
        energy, psi = float(w[0]), v[:, 0]
    residual = np.linalg.norm(h @ psi - energy * psi)
    if residual > residual_tol * max(1.0, abs(energy)):
        raise EigensolverError(f"residual {residual:.2e} above {residual_tol:.0e}")
    return energy, psi


def block_entropy(psi: np.ndarray, block_size: int) -> float:
    """Von Neumann entropy (nats) of the leftmost ``block_size`` sites."""
    n = int(np.log2(len(psi)))
    if not 1 <= block_size <= n - 1:
        raise ValueError("block size must satisfy 1 <= l <= N-1")
    a = psi.reshape(2**block_size, 2 ** (n - block_size))
    s = np.linalg.svd(a, compute_uv=False)
    p = s**2
    p = p[p > 1e-16]
    return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True)
class EntropyProfile:
    n_sites: int
    block_sizes: np.ndarray
    entropies: np.ndarray
    y_values: np.ndarray
    c_eff: float | None = None
    intercept: float | None = None
    residual: float | None = None
    window: tuple | None = None


def entropy_profile(psi: np.ndarray) -> EntropyProfile:
    n = int(np.log2(len(psi)))
    ls = np.arange(1, n)
    s = np.array([block_entropy(psi, l) for l in ls])
    y = np.log((2.0 * n / pi) * np.sin(pi * ls / n))
    return EntropyProfile(n_sites=n, block_sizes=ls, entropies=s, y_values=y)


def default_window(n_sites: int) -> np.ndarray:
    """Even block sizes away from the edges, l in [4, N-4]."""
    ls = np.arange(4, n_sites - 3)
    return ls[ls % 2 == 0]


def fit_central_charge(
    profile: EntropyProfile, window=None
) -> EntropyProfile:
    """Least-squares fit S_l = (c_eff/6) y_l + a on the window.

    Returns a new profile carrying (c_eff, a, RMS residual). Windows with
    fewer than four points or no spread in y_l are rejected.
    """
    if window is None:
        window = default_window(profile.n_sites)
    window = np.asarray(window, dtype=int)
    if len(window) < 4:
        raise ValueError("fit window needs at least four block sizes")
    sel = np.isin(profile.block_sizes, window)
    if sel.sum() != len(window):
        raise ValueError("window contains unavailable block sizes")
    y = profile.y_values[sel]
    s = profile.entropies[sel]
    if np.ptp(y) < 1e-12:
        raise ValueError("degenerate window: no spread in y_l")
    design = np.vstack([y / 6.0, np.ones_like(y)]).T
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    fitted = design @ coef
    residual = float(np.sqrt(np.mean((fitted - s) ** 2)))
    return EntropyProfile(
        n_sites=profile.n_sites,
        block_sizes=profile.block_sizes,
        entropies=profile.entropies,
        y_values=profile.y_values,
        c_eff=float(coef[0]),
        intercept=float(coef[1]),
        residual=residual,
        window=tuple(int(w) for w in window),
    )
