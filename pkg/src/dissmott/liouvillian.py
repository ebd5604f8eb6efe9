"""Single-site Lindblad and Redfield generators as dense superoperators.

Vectorization convention (project-wide): column stacking, so
``A @ rho  <->  kron(I, A) @ vec(rho)`` and
``rho @ B  <->  kron(B.T, I) @ vec(rho)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import reservoir as res
from .errors import TruncationWarning
from .fock import FockSpace, ModelParams, annihilation, creation, hamiltonian_site, identity, site_energies

BOHR_TOL = 1e-9  # relative tolerance grouping equal Bohr frequencies


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a (d, d) matrix into a d^2 vector."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = round(np.sqrt(v.size))
    return v.reshape((dim, dim), order="F")


def left_mult(a: np.ndarray) -> np.ndarray:
    d = a.shape[0]
    return np.kron(np.eye(d), a)


def right_mult(b: np.ndarray) -> np.ndarray:
    d = b.shape[0]
    return np.kron(b.T, np.eye(d))


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """-i [h, .] as a matrix on vectorized density matrices."""
    return -1j * (left_mult(h) - right_mult(h))


def dissipator_superop(lop: np.ndarray) -> np.ndarray:
    """D[L] rho = L rho L^dag - {L^dag L, rho}/2."""
    ldl = lop.conj().T @ lop
    return np.kron(lop.conj(), lop) - 0.5 * (left_mult(ldl) + right_mult(ldl))


@dataclass(frozen=True)
class Superoperator:
    """Dense generator acting on vectorized density matrices."""

    space: FockSpace
    matrix: np.ndarray
    kind: str  # "lindblad" | "redfield"

    @property
    def dim(self) -> int:
        return self.space.dim

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def trace_defect(self) -> float:
        """|vec(I)^T L| / |L|; zero for a trace-preserving generator."""
        tr_row = vec(np.eye(self.dim)).conj() @ self.matrix
        return float(np.linalg.norm(tr_row) / np.linalg.norm(self.matrix))


def _warn_on_edge_pump(spec, space: FockSpace, params: ModelParams):
    edge = params.U * space.nmax  # energy of the dropped nmax -> nmax+1 transition
    if res.rate(spec, edge) > 0:
        warnings.warn(
            f"pump rate is nonzero at the truncation edge (transition energy {edge:g}); "
            f"increase nmax beyond {space.nmax}",
            TruncationWarning,
            stacklevel=3,
        )


def build_lindblad(space: FockSpace, params: ModelParams, spec) -> Superoperator:
    """Lindblad generator: -i[H,.] + kappa D[a] + per-transition pump dissipators.

    The pump adds ``rate(E_{n+1}-E_n) D[sqrt(n+1) |n+1><n|]`` for each Fock
    transition; channels that would leave the truncated space are dropped
    (with a TruncationWarning if their rate is nonzero).
    """
    if isinstance(spec, res.RedfieldSquareReservoir):
        raise TypeError("build_lindblad takes a Square or Lorentzian reservoir")
    a = annihilation(space)
    h = hamiltonian_site(space, params)
    energies = site_energies(space, params)
    mat = commutator_superop(h) + params.kappa * dissipator_superop(a)
    for n in range(space.nmax):
        jump = np.zeros((space.dim, space.dim), dtype=complex)
        jump[n + 1, n] = np.sqrt(n + 1.0)
        mat = mat + res.rate(spec, energies[n + 1] - energies[n]) * dissipator_superop(jump)
    _warn_on_edge_pump(spec, space, params)
    return Superoperator(space=space, matrix=mat, kind="lindblad")


def filtered_annihilation(
    space: FockSpace, params: ModelParams, spec: res.RedfieldSquareReservoir,
    lamb_shift: bool = True,
) -> np.ndarray:
    """Annihilation operator weighted by the reservoir response at each
    Bohr frequency: <n-1|a~|n> = S(E_n - E_{n-1}) sqrt(n)."""
    energies = site_energies(space, params)
    a_t = np.zeros((space.dim, space.dim), dtype=complex)
    clip = res.LOG_CLIP * params.U
    for n in range(1, space.dim):
        s = res.response(spec, energies[n] - energies[n - 1], clip=clip)
        if not lamb_shift:
            s = s.real
        a_t[n - 1, n] = s * np.sqrt(n)
    return a_t


def _bohr_frequencies(space: FockSpace, params: ModelParams) -> np.ndarray:
    """E_i - E_j for each vectorized basis element |i><j|."""
    e = site_energies(space, params)
    return (e[:, None] - e[None, :]).reshape(-1, order="F")


def secular_filter(space: FockSpace, params: ModelParams, pump: np.ndarray) -> np.ndarray:
    """Project a pump superoperator onto terms connecting equal Bohr frequencies."""
    bohr = _bohr_frequencies(space, params)
    keep = np.abs(bohr[:, None] - bohr[None, :]) < BOHR_TOL * params.U
    return pump * keep


def redfield_pump_superop(
    space: FockSpace, params: ModelParams, spec: res.RedfieldSquareReservoir,
    lamb_shift: bool = True,
) -> np.ndarray:
    """Two-sided structured-reservoir dissipator
    r kappa (a^dag rho a~ + a~^dag rho a - a a~^dag rho - rho a~ a^dag)."""
    a = annihilation(space)
    ad = creation(space)
    a_t = filtered_annihilation(space, params, spec, lamb_shift=lamb_shift)
    a_td = a_t.conj().T
    mat = (
        np.kron(a_t.T, ad)
        + np.kron(a.T, a_td)
        - left_mult(a @ a_td)
        - right_mult(a_t @ ad)
    )
    return spec.pump_scale * mat


def build_redfield(
    space: FockSpace, params: ModelParams, spec: res.RedfieldSquareReservoir,
    lamb_shift: bool = True, secular: bool = False,
) -> Superoperator:
    """Redfield generator: -i[H,.] + kappa D[a] + two-sided filtered pump.

    ``secular=True`` drops pump terms connecting unequal Bohr frequencies;
    with ``lamb_shift=False`` that limit reproduces ``build_lindblad`` with
    the matching square reservoir entrywise.
    """
    if not isinstance(spec, res.RedfieldSquareReservoir):
        raise TypeError("build_redfield requires a RedfieldSquareReservoir")
    a = annihilation(space)
    h = hamiltonian_site(space, params)
    pump = redfield_pump_superop(space, params, spec, lamb_shift=lamb_shift)
    if secular:
        pump = secular_filter(space, params, pump)
    mat = commutator_superop(h) + params.kappa * dissipator_superop(a) + pump
    _warn_on_edge_pump(spec, space, params)
    return Superoperator(space=space, matrix=mat, kind="redfield")


def drive_superops(space: FockSpace) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of -i[a, .] and -i[a^dag, .] used by the mean-field drive."""
    return commutator_superop(annihilation(space)), commutator_superop(creation(space))


def add_drive(L: Superoperator, phi: complex) -> Superoperator:
    """Return L - i[phi* a + phi a^dag, .] as a new superoperator."""
    ca, cad = drive_superops(L.space)
    mat = L.matrix + np.conj(phi) * ca + phi * cad
    return Superoperator(space=L.space, matrix=mat, kind=L.kind)
