"""Steady states, Liouvillian eigendecomposition and retarded susceptibilities.

The retarded response of the open site is assembled from the generator's
spectrum in Lehmann form

    G(omega) = sum_a  w_a / (omega + Im lambda_a - i Re lambda_a),
    w_a = tr(a r_a) tr(l_a^dag [a^dag, rho_ss]),

with biorthonormal right/left eigenmatrices r_a, l_a. A direct resolvent
evaluation and a Kramers-Kronig transform are provided as independent
cross-checks of the same quantity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import DegenerateSteadyState, IllConditioned, InvalidFilling
from .fock import FockSpace, ModelParams, annihilation, target_filling
from .liouvillian import Superoperator, unvec, vec

NULL_TOL = 1e-10      # |lambda| below this (in units of U) marks the steady state
PAIR_TOL = 1e-8       # eigenvalue distance treated as degenerate
RESIDUAL_TOL = 1e-6   # biorthonormality residual triggering IllConditioned


def steady_state(L: Superoperator, null_tol: float = NULL_TOL) -> np.ndarray:
    """Unique steady state from the null space of the generator.

    Returns a trace-one Hermitian density matrix. Raises
    DegenerateSteadyState if more than one eigenvalue sits below the null
    threshold.
    """
    vals, vecs = np.linalg.eig(L.matrix)
    null = np.flatnonzero(np.abs(vals) < null_tol)
    if null.size == 0:
        raise DegenerateSteadyState(
            f"no eigenvalue below {null_tol:g}; smallest |lambda| = {np.abs(vals).min():.3e}"
        )
    if null.size > 1:
        raise DegenerateSteadyState(f"{null.size} eigenvalues below the null threshold")
    rho = unvec(vecs[:, null[0]], L.dim)
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise DegenerateSteadyState("null vector is traceless; not a steady state")
    rho = rho / tr
    defect = np.max(np.abs(rho - rho.conj().T))
    if defect > 1e-8:
        raise IllConditioned(f"steady state hermiticity defect {defect:.2e}")
    return (rho + rho.conj().T) / 2.0


def analytic_populations(
    params: ModelParams, N: int | None = None, length: int | None = None
) -> np.ndarray:
    """Steady-state Fock populations of the square-reservoir site at J = 0.

    p_n is proportional to r^n for n <= N and vanishes above; the closed form
    r^n (1-r)/(1-r^{N+1}) is evaluated in the numerically stable normalized
    form, which also covers r = 1.
    """
    if N is None:
        N = target_filling(params.mu_eff, params.U)
    else:
        lo, hi = (N - 1) * params.U, N * params.U
        if N > 0 and not (lo < params.mu_eff < hi):
            raise InvalidFilling(f"mu_eff = {params.mu_eff} does not select filling {N}")
    if length is None:
        length = N + 1
    weights = np.zeros(length)
    n = np.arange(min(N, length - 1) + 1)
    weights[: n.size] = params.r ** n
    return weights / weights.sum()


@dataclass(frozen=True)
class EigenSystem:
    """Biorthonormalized Liouvillian spectrum: tr(l_a^dag r_b) = delta_ab."""

    space: FockSpace
    lambdas: np.ndarray   # (k,)
    rights: np.ndarray    # (k, dim, dim)
    lefts: np.ndarray     # (k, dim, dim)

    def null_index(self, null_tol: float = NULL_TOL) -> int:
        null = np.flatnonzero(np.abs(self.lambdas) < null_tol)
        if null.size != 1:
            raise DegenerateSteadyState(f"{null.size} null eigenvalues found")
        return int(null[0])

    def weights(self, rho_ss: np.ndarray) -> np.ndarray:
        """Lehmann weights w_a = tr(a r_a) tr(l_a^dag [a^dag, rho_ss])."""
        a = annihilation(self.space)
        ad = a.conj().T
        comm = ad @ rho_ss - rho_ss @ ad
        tr_ar = np.einsum("ij,kji->k", a, self.rights)
        tr_lc = np.einsum("kji,ji->k", self.lefts.conj(), comm)
        return tr_ar * tr_lc


def eigendecompose(L: Superoperator, pair_tol: float = PAIR_TOL) -> EigenSystem:
    """Full eigendecomposition with left/right pairing, sorted by Im lambda.

    Degenerate eigenvalue clusters are re-paired through the overlap matrix
    (maximal-overlap tie break); raises IllConditioned when the final
    biorthonormality residual exceeds RESIDUAL_TOL.
    """
    vals, vl, vr = scipy.linalg.eig(L.matrix, left=True, right=True)
    scale = max(1.0, np.abs(vals).max())
    order = np.lexsort((vals.imag, vals.real))
    vals, vl, vr = vals[order], vl[:, order], vr[:, order]

    # cluster eigenvalues closer than pair_tol and invert each overlap block
    k = vals.size
    start = 0
    while start < k:
        stop = start + 1
        while stop < k and abs(vals[stop] - vals[start]) < pair_tol * scale:
            stop += 1
        block = slice(start, stop)
        m = vl[:, block].conj().T @ vr[:, block]
        try:
            vl[:, block] = vl[:, block] @ np.linalg.inv(m).conj().T
        except np.linalg.LinAlgError as exc:
            raise IllConditioned(f"singular overlap block at lambda = {vals[start]}") from exc
        start = stop

    residual = np.max(np.abs(vl.conj().T @ vr - np.eye(k)))
    if residual > RESIDUAL_TOL:
        raise IllConditioned(f"biorthonormality residual {residual:.2e}")

    order = np.argsort(vals.imag, kind="stable")
    vals, vl, vr = vals[order], vl[:, order], vr[:, order]
    dim = L.dim
    rights = np.stack([unvec(vr[:, i], dim) for i in range(k)])
    lefts = np.stack([unvec(vl[:, i], dim) for i in range(k)])
    return EigenSystem(space=L.space, lambdas=vals, rights=rights, lefts=lefts)


def coherence_sector_eigenvalues(L: Superoperator, k: int = 1) -> np.ndarray:
    """Eigenvalues of the generator restricted to the |n+k><n| sector.

    Valid for drive-free generators, which conserve the coherence ladder;
    raises ValueError if the sector couples to the rest.
    """
    dim = L.dim
    i = np.arange(dim * dim) % dim
    j = np.arange(dim * dim) // dim
    idx = np.flatnonzero(i - j == k)
    rest = np.flatnonzero(i - j != k)
    coupling = np.abs(L.matrix[np.ix_(rest, idx)]).max() if rest.size else 0.0
    if coupling > 1e-12 * max(1.0, np.abs(L.matrix).max()):
        raise ValueError("generator does not conserve the coherence sector")
    return np.linalg.eigvals(L.matrix[np.ix_(idx, idx)])


@dataclass(frozen=True)
class GreensFunction:
    """Retarded susceptibility samples plus their pole/weight decomposition."""

    omegas: np.ndarray
    values: np.ndarray
    pole_lambdas: np.ndarray
    pole_weights: np.ndarray

    @classmethod
    def from_poles(cls, lambdas, weights, omegas) -> "GreensFunction":
        lambdas = np.asarray(lambdas, dtype=complex)
        weights = np.asarray(weights, dtype=complex)
        omegas = np.asarray(omegas, dtype=float)
        values = _eval_poles(lambdas, weights, omegas)
        return cls(omegas=omegas, values=values, pole_lambdas=lambdas, pole_weights=weights)

    def evaluate(self, omega):
        """Evaluate from the pole decomposition at arbitrary frequencies."""
        w = np.asarray(omega, dtype=float)
        out = _eval_poles(self.pole_lambdas, self.pole_weights, np.atleast_1d(w))
        return out if w.ndim else complex(out[0])

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("omega,re,im\n")
            for w, v in zip(self.omegas, self.values):
                fh.write(f"{w:.17g},{v.real:.17g},{v.imag:.17g}\n")

    def poles_as_dicts(self) -> list[dict]:
        return [
            {
                "lambda_re": lam.real,
                "lambda_im": lam.imag,
                "weight_re": w.real,
                "weight_im": w.imag,
            }
            for lam, w in zip(self.pole_lambdas, self.pole_weights)
        ]

    def write_poles_json(self, path):
        with open(path, "w") as fh:
            json.dump({"poles": self.poles_as_dicts()}, fh, indent=1)


def _eval_poles(lambdas: np.ndarray, weights: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    denom = omegas[:, None] + lambdas.imag[None, :] - 1j * lambdas.real[None, :]
    return (weights[None, :] / denom).sum(axis=1)


def greens_retarded(sys: EigenSystem, rho_ss: np.ndarray, omegas) -> GreensFunction:
    """Lehmann-form retarded susceptibility of the annihilation operator."""
    return GreensFunction.from_poles(sys.lambdas, sys.weights(rho_ss), omegas)


def greens_groundstate(
    N: int, U: float, mu_eff: float, eta: float | None = None, omegas=None
) -> GreensFunction:
    """Closed-form ground-state susceptibility with poles at U*N and U*(N-1).

    G(omega) = (N+1)/(omega - U N + i eta) - N/(omega - U (N-1) + i eta)
    in the rotating frame; eta defaults to 1e-6 * U. ``mu_eff`` fixes the
    lobe only; the pole positions do not depend on it inside the lobe.
    """
    if N < 1:
        raise InvalidFilling("ground-state susceptibility needs N >= 1")
    if eta is None:
        eta = 1e-6 * U
    if omegas is None:
        omegas = np.linspace(-1.0 * U, (N + 2.0) * U, 2001)
    lambdas = np.array([-eta - 1j * U * N, -eta - 1j * U * (N - 1)])
    weights = np.array([N + 1.0, -float(N)])
    return GreensFunction.from_poles(lambdas, weights, omegas)


def greens_resolvent(L: Superoperator, rho_ss: np.ndarray, omegas) -> np.ndarray:
    """Resolvent-route susceptibility: one linear solve per frequency.

    Independent of the eigendecomposition; used to cross-check the Lehmann
    sum.
    """
    space = L.space
    a = annihilation(space)
    ad = a.conj().T
    x = vec(ad @ rho_ss - rho_ss @ ad)
    a_row = vec(a.T)
    eye = np.eye(L.dim ** 2)
    out = np.empty(len(omegas), dtype=complex)
    for i, w in enumerate(np.asarray(omegas, dtype=float)):
        y = np.linalg.solve(1j * w * eye + L.matrix, x)
        out[i] = 1j * (a_row @ y)
    return out


def kramers_kronig_real(omegas: np.ndarray, im_values: np.ndarray, pad_factor: int = 8) -> np.ndarray:
    """Real part reconstructed from Im G by a padded FFT Hilbert transform.

    Requires a uniform frequency grid.
    """
    omegas = np.asarray(omegas)
    d = np.diff(omegas)
    if np.abs(d - d[0]).max() > 1e-9 * abs(d[0]):
        raise ValueError("kramers_kronig_real requires a uniform grid")
    n = len(im_values)
    analytic = scipy.signal.hilbert(im_values, N=pad_factor * n)
    return -np.imag(analytic[:n])
