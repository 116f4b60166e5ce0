"""Numerical toolkit for long-range spin models in driven trapped-ion chains.

Submodules
----------
ion_crystal     equilibrium positions and transverse normal modes
couplings       phonon-mediated spin-spin couplings and drive-regime checks
hamiltonians    lab/interaction/effective Hamiltonians on spin (x) Fock spaces
evolution       time-dependent propagation and observables
fidelity        Haar-averaged channel fidelity of exact vs effective dynamics
adiabatic       two-stage ground-state preparation protocol
field_theory    sigma-model parameters from coupling tails
spectra_entropy exact diagonalization, block entropies, central-charge fits
cli             batch front-end emitting plot-ready CSV/JSON
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    adiabatic,
    couplings,
    evolution,
    fidelity,
    field_theory,
    hamiltonians,
    ion_crystal,
    spectra_entropy,
)
