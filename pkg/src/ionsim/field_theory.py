"""Sigma-model parameters extracted from long-range coupling tails.

Couplings enter in the spin-operator normalization Jt_r = 4 J_r (Pauli
matrices carry the factor four relative to spin-1/2 operators). The
velocity and coupling constant follow from the staggered/uniform sums

    v = 2 a S sqrt(sum_odd Jt_r * chi),   g = (2/S) sqrt(sum_odd Jt_r / chi),

with chi = sum_r (-1)^(r+1) r^2 Jt_r, and topological angle 2 pi S.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.constants import pi
from scipy.special import zeta


@dataclass(frozen=True)
class NlsmParams:
    """Velocity, coupling and topological angle of the mapped field theory."""

    v: float  # spinon velocity (units of a * coupling)
    g: float  # dimensionless coupling; inf marks the instability
    theta: float  # topological angle, mod 2 pi
    spin: float
    lattice_a: float
    chi: float = float("nan")  # alternating second-moment sum
    odd_sum: float = float("nan")
    tail_bound: float = float("nan")
    unstable: bool = False


def dirichlet_eta(x: float) -> float:
    """eta(x) = (1 - 2^(1-x)) zeta(x), with the removable point eta(1) = log 2."""
    if x == 1.0:
        return float(np.log(2.0))
    return float((1.0 - 2.0 ** (1.0 - x)) * zeta(x))


def _tail_values(j_tilde: Callable[[int], float], r_max: int) -> np.ndarray:
    """Jt_r for r = 1..r_max; vectorized when the callable allows it."""
    r = np.arange(1, r_max + 1)
    try:
        vals = np.asarray(j_tilde(r), dtype=float)
        if vals.shape == r.shape:
            return vals
    except Exception:
        pass
    return np.array([float(j_tilde(int(k))) for k in r])


def _pairwise_sums(j_tilde: Callable[[int], float], r_max: int) -> tuple[float, float, float]:
    """Odd-coupling sum and alternating r^2 sum, accumulated in (odd, even) pairs.

    Pairing consecutive terms keeps the conditionally convergent alternating
    series stable; the returned bound estimates the dropped tail from the
    last pair.
    """
    if r_max % 2 == 1:
        r_max += 1
    vals = _tail_values(j_tilde, r_max)
    r = np.arange(1, r_max + 1)
    odd_sum = float(vals[0::2].sum())
    pairs = (r[0::2] ** 2) * vals[0::2] - (r[1::2] ** 2) * vals[1::2]
    chi = float(pairs.sum())
    last_pair = float(abs(pairs[-1])) if len(pairs) else np.inf
    return odd_sum, chi, last_pair


def nlsm_from_couplings(
    j_tilde: Callable[[int], float] | np.ndarray,
    spin: float = 0.5,
    lattice_a: float = 1.0,
    r_max: int = 10_000,
) -> NlsmParams:
    """Map a translationally invariant coupling tail onto sigma-model parameters.

    ``j_tilde`` is either a callable r -> Jt_r (r >= 1) or an array with
    Jt_r at index r. Antiferromagnetic tails (Jt_r > 0) are assumed. A
    non-positive chi means the gradient term changes sign; that case is
    reported as an instability (g unbounded), not raised.
    """
    if isinstance(j_tilde, np.ndarray):
        arr = np.asarray(j_tilde, dtype=float)
        r_max = min(r_max, len(arr) - 1)

        def j_fun(r):
            return arr[r]

    else:
        j_fun = j_tilde
    if j_fun(1) <= 0:
        raise ValueError("expected antiferromagnetic couplings with Jt_1 > 0")
    odd_sum, chi, tail = _pairwise_sums(j_fun, r_max)
    theta = (2.0 * pi * spin) % (2.0 * pi)
    if chi <= 0.0 or odd_sum <= 0.0:
        return NlsmParams(
            v=float("nan"),
            g=float("inf"),
            theta=theta,
            spin=spin,
            lattice_a=lattice_a,
            chi=chi,
            odd_sum=odd_sum,
            tail_bound=tail,
            unstable=True,
        )
    v = 2.0 * lattice_a * spin * np.sqrt(odd_sum * chi)
    g = (2.0 / spin) * np.sqrt(odd_sum / chi)
    return NlsmParams(
        v=v,
        g=g,
        theta=theta,
        spin=spin,
        lattice_a=lattice_a,
        chi=chi,
        odd_sum=odd_sum,
        tail_bound=tail,
    )


def two_neighbor_g(j1: float, j2: float) -> float:
    """Spin-1/2 coupling constant with the tail truncated at two neighbors.

    g = 4 / sqrt(1 - 4 Jt_2/Jt_1); returns inf at and beyond the
    instability Jt_2 -> Jt_1/4.
    """
    if j1 <= 0:
        raise ValueError("Jt_1 must be positive")
    radicand = 1.0 - 4.0 * j2 / j1
    if radicand <= 0.0:
        return float("inf")
    return 4.0 / np.sqrt(radicand)


def power_law_nlsm(
    s: float,
    j1: float = 1.0,
    lattice_a: float = 1.0,
    spin: float = 0.5,
) -> NlsmParams:
    """Closed forms for the power-law tail Jt_r = Jt_1 / r^s.

    The odd sum is Jt_1 (1 - 2^-s) zeta(s) and the alternating sum
    Jt_1 (1 - 2^(3-s)) zeta(s-2); both require s > 2. At s = 2 the
    alternating series is Abel-regularized to Jt_1/2, and the published
    inverse-square constants v = 4 pi a J1, g = 2 pi are returned.
    """
    if s < 2.0:
        raise ValueError("power-law tail diverges for s < 2")
    theta = (2.0 * pi * spin) % (2.0 * pi)
    if s == 2.0:
        # Abel-regularized endpoint (1 - 1 + 1 - ... = 1/2).
        return NlsmParams(
            v=4.0 * pi * lattice_a * j1,
            g=2.0 * pi,
            theta=theta,
            spin=spin,
            lattice_a=lattice_a,
            chi=j1 / 2.0,
            odd_sum=j1 * (1.0 - 2.0**-2) * zeta(2.0),
        )
    odd_sum = j1 * (1.0 - 2.0**-s) * zeta(s)
    chi = j1 * dirichlet_eta(s - 2.0)
    if chi <= 0.0:
        return NlsmParams(
            v=float("nan"),
            g=float("inf"),
            theta=theta,
            spin=spin,
            lattice_a=lattice_a,
            chi=chi,
            odd_sum=odd_sum,
            unstable=True,
        )
    v = 2.0 * lattice_a * spin * np.sqrt(odd_sum * chi)
    g = (2.0 / spin) * np.sqrt(odd_sum / chi)
    return NlsmParams(v=v, g=g, theta=theta, spin=spin, lattice_a=lattice_a, chi=chi, odd_sum=odd_sum)


def trapped_ion_g(lam: float) -> float:
    """Closed-form coupling constant for the trapped-ion tail at small lambda.

    g = sqrt(7 zeta(3)/2 + 2 lambda) / sqrt(log 2 - 2 lambda); the
    denominator radicand crossing zero is the instability and returns inf.
    """
    num = 7.0 * zeta(3.0) / 2.0 + 2.0 * lam
    den = np.log(2.0) - 2.0 * lam
    if den <= 0.0 or num < 0.0:
        return float("inf")
    return float(np.sqrt(num) / np.sqrt(den))


def trapped_ion_tail(
    j0: float,
    lam: float,
    xi0_over_a0: float,
) -> Callable[[int], float]:
    """Coupling tail Jt_r of the ion chain in spin normalization.

    Jt_r = 4 |J0 lambda| / r^3 + 8 |J0| sgn(lambda)^(1+r) exp(-r a0/xi0)
    for r >= 2 (dipolar term only at r = 1).
    """
    sign = 1.0 if lam >= 0 else -1.0

    def tail(r: int) -> float:
        value = 4.0 * abs(j0 * lam) / r**3
        if r >= 2:
            value += 8.0 * abs(j0) * sign ** (1 + r) * np.exp(-r / xi0_over_a0)
        return value

    return tail
