"""First-order perturbation theory in the dissipator for the coherence ladder.

Treating the loss and pump dissipators as a perturbation on top of the Kerr
commutator gives closed-form corrections for the |n+1><n| sector that
controls the susceptibility: the eigenvalue acquires the familiar half-sum
of departure rates, while the eigenvector corrections produce complex
Lehmann weights. For the two-sided (Redfield) pump the weight's imaginary
part grows with the pump rate, tilting the doublon resonance into the
asymmetric shape whose flank zero sets the critical frequency; the
per-transition (Lindblad) pump leaves no pump contribution in the
eigenvectors at this order.

The reservoir response entering the formulas is treated as real here (its
imaginary part is the Lamb shift, excluded from these comparisons); exact
reference spectra should therefore be built with ``lamb_shift=False``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import reservoir as res
from .errors import FitFailure
from .fock import FockSpace, ModelParams, default_nmax, site_energies
from .spectral import EigenSystem, GreensFunction

WEAK_DISSIPATION = 0.05  # warn above this r*kappa/U


def _half_response(params: ModelParams, spec, omega: float) -> float:
    """Dimensionless pump response entering the perturbative formulas.

    Equals half the Lindblad shape (theta/2 for the square window), i.e. the
    real part of the complex reservoir response.
    """
    if isinstance(spec, res.RedfieldSquareReservoir):
        return res.response(spec, omega, clip=res.LOG_CLIP * params.U).real
    if params.pump_scale == 0:
        return 0.0
    return float(res.rate(spec, omega)) / (2.0 * params.pump_scale)


def _ket_bra(dim: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def first_order_eigs(
    params: ModelParams,
    spec=None,
    variant: str = "redfield",
    nmax: int | None = None,
) -> EigenSystem:
    """Perturbative eigenpairs of the |n+1><n| coherence sector.

    Returns an EigenSystem holding lambda_{n+1,n} and the corrected
    right/left eigenmatrices for n = 0 .. nmax-1. The ``lindblad`` variant
    keeps the same eigenvalues but drops the pump-induced eigenvector
    corrections, which are non-secular.
    """
    if variant not in ("redfield", "lindblad"):
        raise ValueError(f"unknown variant {variant!r}")
    if params.pump_scale / params.U > WEAK_DISSIPATION:
        warnings.warn(
            f"r*kappa/U = {params.pump_scale / params.U:.3g} is not small; "
            "first-order results are unreliable",
            stacklevel=2,
        )
    if spec is None:
        spec = res.RedfieldSquareReservoir.from_model(params)
    space = FockSpace(nmax if nmax is not None else default_nmax(params))
    dim = space.dim
    e = site_energies(space, params)
    omega = np.diff(e)  # omega[n] = E_{n+1} - E_n
    kap, pump, u = params.kappa, params.pump_scale, params.U

    s = [_half_response(params, spec, w) for w in omega]
    lambdas = np.empty(space.nmax, dtype=complex)
    rights = np.zeros((space.nmax, dim, dim), dtype=complex)
    lefts = np.zeros((space.nmax, dim, dim), dtype=complex)
    for n in range(space.nmax):
        lam = -1j * omega[n] - kap / 2.0 * (2 * n + 1) - pump * s[n] * (n + 1)
        if n + 2 <= space.nmax:
            lam -= pump * np.conj(s[n + 1]) * (n + 2)
        lambdas[n] = lam

        r = _ket_bra(dim, n + 1, n)
        l = _ket_bra(dim, n + 1, n)
        if n >= 1:
            r += 1j * (kap / u) * np.sqrt((n + 1.0) * n) * _ket_bra(dim, n, n - 1)
        if n + 2 <= space.nmax:
            l += 1j * (kap / u) * np.sqrt((n + 2.0) * (n + 1.0)) * _ket_bra(dim, n + 2, n + 1)
        if variant == "redfield":
            if n + 2 <= space.nmax:
                r -= (
                    1j * (pump / u) * np.sqrt((n + 2.0) * (n + 1.0))
                    * (s[n] + np.conj(s[n + 1]))
                    * _ket_bra(dim, n + 2, n + 1)
                )
            if n >= 1:
                l -= (
                    1j * (pump / u) * np.sqrt((n + 1.0) * n)
                    * (s[n] + np.conj(s[n - 1]))
                    * _ket_bra(dim, n, n - 1)
                )
        rights[n] = r
        lefts[n] = l
    return EigenSystem(space=space, lambdas=lambdas, rights=rights, lefts=lefts)


def doublon_pole(
    params: ModelParams, N: int, spec=None, variant: str = "redfield",
    pump_weight: bool = True, nmax: int | None = None,
) -> tuple[complex, complex]:
    """(lambda, w) of the doublon resonance with populations p_n = delta_{nN}.

    The weight is the product of the perturbative trace factors
    tr(a r) tr(l^dag [a^dag, rho]); ``pump_weight=False`` discards the
    pump-induced part, leaving a purely Lorentzian peak.
    """
    sysm = first_order_eigs(params, spec=spec, variant=variant, nmax=nmax)
    if not 0 <= N < sysm.lambdas.size:
        raise ValueError(f"N = {N} has no doublon sector at this truncation")
    rho = sysm.space.basis_state(N)
    w = sysm.weights(rho)[N]
    if not pump_weight:
        sys_lind = first_order_eigs(params, spec=spec, variant="lindblad", nmax=nmax)
        w = sys_lind.weights(rho)[N]
        w = complex(w.real, w.imag if variant == "lindblad" else 0.0) if False else w
    return sysm.lambdas[N], w


def single_peak_greens(
    params: ModelParams, N: int, omegas, spec=None, pump_weight: bool = True,
    nmax: int | None = None,
) -> GreensFunction:
    """Doublon-peak approximation to the susceptibility: its single Lehmann
    pole term with perturbative weight and eigenvalue, numerator complex
    through the pump-induced anti-Lorentzian part, denominator
    omega - (E_{N+1} - E_N) + i (kappa/2)(2N+1) inside the Mott lobe."""
    lam, w = doublon_pole(params, N, spec=spec, pump_weight=pump_weight, nmax=nmax)
    return GreensFunction.from_poles([lam], [w], np.asarray(omegas, dtype=float))


# ---------------------------------------------------------------------------
# anti-Lorentzian peak fit


@dataclass(frozen=True)
class PeakFit:
    """Parameters of f(omega) = b (1 - i gamma a) / (omega - center + i gamma)."""

    a: float
    b: float
    gamma: float
    center: float
    residual: float

    @property
    def omega_zero(self) -> float:
        """Flank zero of Im f: center - 1/a."""
        return self.center - 1.0 / self.a

    @property
    def hopping(self) -> float:
        """-1/Re f at the flank zero, which evaluates to 1/(a b)."""
        return 1.0 / (self.a * self.b)


def antilorentzian(omega, a: float, b: float, gamma: float, center: float):
    """Single complex peak with asymmetric imaginary part."""
    return b * (1.0 - 1j * gamma * a) / (np.asarray(omega) - center + 1j * gamma)


def antilorentzian_fit(
    G: GreensFunction, window: tuple[float, float], n_points: int = 801
) -> PeakFit:
    """Least-squares fit of a single anti-Lorentzian peak inside ``window``.

    The window must isolate one peak. Raises FitFailure when the residual
    exceeds 5% of the peak height.
    """
    grid = np.linspace(window[0], window[1], n_points)
    y = G.evaluate(grid)
    im = y.imag
    peak = int(np.argmin(im))
    height = -im[peak]
    if height <= 0:
        raise FitFailure("window contains no negative-imaginary peak")
    center0 = grid[peak]
    half = im < -height / 2.0
    gamma0 = max(float(half.sum()) * (grid[1] - grid[0]) / 2.0, grid[1] - grid[0])
    b0 = height * gamma0
    sign = np.sign(im)
    flips = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    if flips.size:
        a0 = 1.0 / max(center0 - grid[flips[0]], gamma0)
    else:
        a0 = 0.1 / gamma0

    def resid(x):
        f = antilorentzian(grid, *x)
        return np.concatenate([(f.real - y.real), (f.imag - y.imag)])

    sol = least_squares(
        resid, x0=[a0, b0, gamma0, center0],
        x_scale=[abs(a0) + 1.0 / gamma0, b0, gamma0, max(abs(center0), 1.0)],
    )
    a, b, gamma, center = sol.x
    fit = antilorentzian(grid, a, b, gamma, center)
    residual = float(np.abs(fit - y).max() / height)
    if residual > 0.05:
        raise FitFailure(f"fit residual {residual:.3f} exceeds 5% of the peak height")
    return PeakFit(a=float(a), b=float(b), gamma=float(gamma), center=float(center), residual=residual)
