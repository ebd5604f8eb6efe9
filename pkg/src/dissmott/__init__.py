"""Driven-dissipative Bose-Hubbard single-site toolkit.

Builds single-site Lindblad/Redfield generators for a lossy Kerr site pumped
by a structured reservoir, extracts steady states and retarded
susceptibilities from the generator spectrum, solves the mean-field
critical-point equations for the Mott -> limit-cycle instability, integrates
self-consistent Gutzwiller dynamics, and sweeps phase diagrams.
"""

from .fock import FockSpace, ModelParams, annihilation, coherent_state, default_nmax, hamiltonian_site, target_filling
from .liouvillian import Superoperator, add_drive, build_lindblad, build_redfield, unvec, vec
from .reservoir import LorentzianReservoir, RedfieldSquareReservoir, SquareReservoir, lamb_shift, rate
from .spectral import (
    EigenSystem,
    GreensFunction,
    analytic_populations,
    eigendecompose,
    greens_groundstate,
    greens_resolvent,
    greens_retarded,
    steady_state,
)

__version__ = "0.1.0"
