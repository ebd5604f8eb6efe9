"""Truncated bosonic Fock space, ladder operators and the on-site Hamiltonian.

All operators are dense complex ``(dim, dim)`` arrays over the basis
``|0>, ..., |nmax>``. Energies are measured in units of the on-site
interaction ``U`` unless stated otherwise, in the rotating frame where the
bare oscillator frequency has been gauged away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidFilling

EXTRA_LEVELS = 5  # default headroom above the target filling


@dataclass(frozen=True)
class FockSpace:
    """Bosonic Fock space truncated at occupation ``nmax`` (dimension nmax+1)."""

    nmax: int

    def __post_init__(self):
        if self.nmax < 1:
            raise ValueError(f"nmax must be >= 1, got {self.nmax}")

    @property
    def dim(self) -> int:
        return self.nmax + 1

    def occupations(self) -> np.ndarray:
        return np.arange(self.dim)

    def basis_state(self, n: int) -> np.ndarray:
        """Density matrix of the Fock state |n><n|."""
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[n, n] = 1.0
        return rho


@dataclass(frozen=True)
class ModelParams:
    """Physical couplings of the driven-dissipative Bose-Hubbard site.

    Parameters
    ----------
    U : on-site interaction, sets the unit of energy.
    J : hopping rate (enters only through the mean-field drive and the
        critical-point equations).
    z : lattice coordination number.
    kappa : single-particle loss rate.
    r : pump/loss ratio; the pump rate is ``r * kappa``.
    mu_eff : effective chemical potential imposed by the reservoir.
    omega0 : bare oscillator frequency, used only by the Redfield response.
    """

    U: float = 1.0
    J: float = 0.0
    z: int = 6
    kappa: float = 1e-3
    r: float = 100.0
    mu_eff: float = 0.5
    omega0: float = 10.0

    def __post_init__(self):
        if self.U <= 0:
            raise ValueError("U must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.r < 0:
            raise ValueError("r must be nonnegative")
        if self.z < 1:
            raise ValueError("z must be >= 1")
        if self.J < 0:
            raise ValueError("J must be nonnegative")

    @property
    def pump_scale(self) -> float:
        """Full pump rate r*kappa multiplying the reservoir spectral shape."""
        return self.r * self.kappa


def annihilation(space: FockSpace) -> np.ndarray:
    """Ladder operator with <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), k=1).astype(complex)


def creation(space: FockSpace) -> np.ndarray:
    return annihilation(space).conj().T


def number_op(space: FockSpace) -> np.ndarray:
    return np.diag(space.occupations().astype(float)).astype(complex)


def identity(space: FockSpace) -> np.ndarray:
    return np.eye(space.dim, dtype=complex)


def site_energies(space: FockSpace, params: ModelParams) -> np.ndarray:
    """Interaction energies E_n = U n(n-1)/2 (rotating frame, real array)."""
    n = space.occupations().astype(float)
    return params.U * n * (n - 1.0) / 2.0


def hamiltonian_site(space: FockSpace, params: ModelParams) -> np.ndarray:
    """Single-site Hamiltonian, diagonal with E_n = U n(n-1)/2."""
    return np.diag(site_energies(space, params)).astype(complex)


def coherent_state(space: FockSpace, alpha: complex) -> np.ndarray:
    """Density matrix of the (truncated, renormalized) coherent state |alpha>."""
    n = space.occupations()
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amp = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact) if alpha != 0 else np.eye(space.dim)[0].astype(complex)
    if alpha != 0:
        amp = amp * np.exp(-abs(alpha) ** 2 / 2.0)
    psi = amp / np.linalg.norm(amp)
    return np.outer(psi, psi.conj())


def target_filling(mu_eff: float, U: float = 1.0, rtol: float = 1e-12) -> int:
    """Integer filling N selected by N-1 < mu_eff/U < N (N = 0 for mu_eff < 0).

    Raises
    ------
    InvalidFilling
        If mu_eff/U sits exactly on an integer, where the filling condition
        is violated.
    """
    x = mu_eff / U
    if x < 0 and abs(x - round(x)) > rtol:
        return 0
    if abs(x - round(x)) <= max(rtol, rtol * abs(x)):
        raise InvalidFilling(
            f"mu_eff/U = {x} is an integer: no unique filling is selected"
        )
    return int(math.floor(x)) + 1


def default_nmax(params: ModelParams) -> int:
    """Truncation N + 5; populations decay geometrically in 1/r above N."""
    return target_filling(params.mu_eff, params.U) + EXTRA_LEVELS
