"""Critical-point solvers for the Mott -> limit-cycle instability.

The mean-field boundary follows from the local susceptibility of the
disconnected site: the critical frequency is the zero of Im G in the gain
window above the effective chemical potential, and the critical hopping is
J_c = -1/Re G at that frequency. A Bethe-lattice variant couples the two
conditions through the hopping dependence of the susceptibility and is
solved by fixed-point iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect

from . import reservoir as res
from .errors import NoConvergence, NoRoot, WrongSign
from .fock import FockSpace, ModelParams, default_nmax, target_filling
from .liouvillian import build_lindblad, build_redfield
from .spectral import GreensFunction, eigendecompose, greens_retarded, steady_state

WINDOW_KAPPA = 20.0   # upper window edge sits this many kappa above U*N
FREQ_XTOL = 1e-10     # bisection tolerance on omega_c, units of U


@dataclass(frozen=True)
class CriticalPoint:
    omega_c: float
    J_c: float
    method: str           # "rpa" | "ground_state" | "dmft" | "dynamics"
    filling: int
    uncertainty: float = 0.0


def default_window(params: ModelParams, N: int | None = None) -> tuple[float, float]:
    """Search window (mu_eff, U N + 20 kappa) on the doublon flank."""
    if N is None:
        N = target_filling(params.mu_eff, params.U)
    return params.mu_eff, params.U * N + WINDOW_KAPPA * params.kappa


def find_critical_frequency(
    G: GreensFunction, window: tuple[float, float], scan_points: int = 4001
) -> float:
    """Zero of Im G in the window, refined by bisection to 1e-10 (units of U).

    When several zeros lie in the window, only those with Re G < 0 are
    physical; the one minimizing J_c = -1/Re G (the first unstable mode)
    is returned. Raises NoRoot when no sign change exists.
    """
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"empty window {window}")
    grid = np.linspace(lo, hi, scan_points)
    # refine the upper part of the window where the flank zero lives
    grid = np.union1d(grid, np.linspace(lo + 0.5 * (hi - lo), hi, scan_points))
    im = G.evaluate(grid).imag
    f = lambda w: G.evaluate(w).imag
    roots = []
    for k in np.flatnonzero(np.sign(im[:-1]) * np.sign(im[1:]) < 0):
        roots.append(bisect(f, grid[k], grid[k + 1], xtol=FREQ_XTOL))
    for k in np.flatnonzero(im == 0.0):
        roots.append(grid[k])
    physical = [w for w in roots if G.evaluate(w).real < 0]
    if not physical:
        raise NoRoot(f"Im G has no physical zero in ({lo:g}, {hi:g})")
    return min(physical, key=lambda w: -1.0 / G.evaluate(w).real)


def critical_hopping(G: GreensFunction, omega_c: float) -> float:
    """J_c = -1 / Re G(omega_c); raises WrongSign when Re G >= 0."""
    re = G.evaluate(omega_c).real
    if re >= 0:
        raise WrongSign(f"Re G({omega_c:g}) = {re:g} >= 0: no transition here")
    return -1.0 / re


def local_susceptibility(
    params: ModelParams,
    spec=None,
    generator: str = "lindblad",
    nmax: int | None = None,
    omegas=None,
) -> GreensFunction:
    """Steady-state susceptibility of the disconnected (J = 0) site."""
    space = FockSpace(nmax if nmax is not None else default_nmax(params))
    if spec is None:
        if generator == "redfield":
            spec = res.RedfieldSquareReservoir.from_model(params)
        else:
            spec = res.SquareReservoir.from_model(params)
    if generator == "redfield":
        L = build_redfield(space, params, spec)
    else:
        L = build_lindblad(space, params, spec)
    rho = steady_state(L)
    sysm = eigendecompose(L)
    if omegas is None:
        lo, hi = default_window(params)
        omegas = np.linspace(min(0.0, lo) - params.U, hi + params.U, 2001)
    return greens_retarded(sysm, rho, omegas)


def critical_point_rpa(
    params: ModelParams,
    spec=None,
    generator: str = "lindblad",
    nmax: int | None = None,
    window: tuple[float, float] | None = None,
) -> CriticalPoint:
    """Solve the zero-damping pair Im G(omega_c) = 0, 1/J_c = -Re G(omega_c)."""
    N = target_filling(params.mu_eff, params.U)
    G = local_susceptibility(params, spec=spec, generator=generator, nmax=nmax)
    if window is None:
        window = default_window(params, N)
    omega_c = find_critical_frequency(G, window)
    return CriticalPoint(
        omega_c=omega_c, J_c=critical_hopping(G, omega_c), method="rpa", filling=N
    )


def ground_state_hopping(N: int, mu: float, U: float = 1.0) -> float:
    """Closed-form lobe boundary -1/Re G_gs(mu) in the rotating frame."""
    re = (N + 1.0) / (mu - U * N) - N / (mu - U * (N - 1.0))
    if re >= 0:
        raise WrongSign(f"Re G_gs({mu:g}) = {re:g} >= 0")
    return -1.0 / re


def ground_state_lobe(N: int, mu_grid: Sequence[float], U: float = 1.0) -> list[tuple[float, float]]:
    """Static-transition boundary J_c(mu) for the filling-N lobe.

    The critical frequency is pinned to mu (equilibrium prescription), so
    the boundary closes at both lobe edges where a pole of G is approached.
    """
    lo, hi = U * (N - 1.0), U * N
    out = []
    for mu in mu_grid:
        if not (lo < mu < hi):
            raise ValueError(f"mu = {mu} outside the filling-{N} lobe ({lo}, {hi})")
        out.append((float(mu), ground_state_hopping(N, mu, U)))
    return out


def _bethe_hopping(re_g: float, z: float) -> float:
    """Smaller positive root of (re_g^2 / z) J^2 + re_g J + 1 = 0."""
    if re_g >= 0:
        raise WrongSign(f"Re G = {re_g:g} >= 0")
    disc = 1.0 - 4.0 / z
    if disc < 0:
        raise NoConvergence(f"no real hopping root for z = {z} < 4")
    return 2.0 / (-re_g * (1.0 + math.sqrt(disc)))


def dmft_critical(
    G: Callable[[float, float], complex],
    z: float,
    bracket: tuple[float, float],
    rel_tol: float = 1e-8,
    max_iter: int = 200,
    j_init: float | None = None,
    scan_points: int = 201,
) -> CriticalPoint:
    """Bethe-lattice critical point from a finite-J susceptibility callback.

    Alternates a frequency root find Im G(omega, J) = 0 inside ``bracket``
    with the hopping update 1/J + Re G + (J/z) (Re G)^2 = 0 until J is
    stationary to ``rel_tol`` (relative); raises NoConvergence otherwise.
    """
    lo, hi = bracket

    def omega_root(j: float) -> float:
        grid = np.linspace(lo, hi, scan_points)
        im = np.array([G(w, j).imag for w in grid])
        sign = np.flatnonzero(np.sign(im[:-1]) * np.sign(im[1:]) < 0)
        if sign.size == 0:
            raise NoRoot(f"Im G(., J={j:g}) has no zero in {bracket}")
        k = sign[0]
        return bisect(lambda w: G(w, j).imag, grid[k], grid[k + 1], xtol=FREQ_XTOL)

    j = j_init if j_init is not None else 0.0
    omega_c = omega_root(j)
    j = _bethe_hopping(G(omega_c, j).real, z)
    for _ in range(max_iter):
        omega_c = omega_root(j)
        j_new = _bethe_hopping(G(omega_c, j).real, z)
        if abs(j_new - j) <= rel_tol * abs(j):
            return CriticalPoint(omega_c=omega_c, J_c=j_new, method="dmft", filling=-1)
        j = j_new
    raise NoConvergence(f"hopping not stationary after {max_iter} iterations")


def dmft_residuals(G, point: CriticalPoint, z: float) -> tuple[float, float]:
    """Residuals of the two Bethe-lattice conditions at a candidate point."""
    g = G(point.omega_c, point.J_c)
    r1 = abs(g.imag)
    r2 = abs(1.0 / point.J_c + g.real + point.J_c / z * g.real**2)
    return r1, r2


@dataclass(frozen=True)
class LobePoint:
    mu_eff: float
    r: float
    filling: int
    omega_c: float | None
    J_c: float | None
    J_c_gs: float


def lobe_scan(
    params_base: ModelParams,
    mu_grid: Sequence[float],
    r_list: Sequence[float],
    generator: str = "lindblad",
    nmax: int | None = None,
) -> list[LobePoint]:
    """Phase-diagram table over (mu_eff, r) for the square reservoir.

    Steady-state boundaries use the zero-damping pair; the ground-state
    column is the closed-form lobe. Points without a physical zero are
    recorded with empty (None) entries. Within one lobe at fixed r the
    steady-state J_c must be constant in mu_eff (the generator depends on
    mu_eff only through which pump channels are open); this is verified.
    """
    rows: list[LobePoint] = []
    for r in r_list:
        by_filling: dict[int, float] = {}
        for mu in mu_grid:
            params = replace(params_base, r=float(r), mu_eff=float(mu))
            N = target_filling(mu, params.U)
            j_gs = ground_state_hopping(N, mu, params.U) if N >= 1 else math.inf
            try:
                point = critical_point_rpa(params, generator=generator, nmax=nmax)
                omega_c, j_c = point.omega_c, point.J_c
            except (NoRoot, WrongSign):
                omega_c, j_c = None, None
            if j_c is not None:
                prev = by_filling.setdefault(N, j_c)
                if abs(prev - j_c) > 1e-9 * max(prev, j_c):
                    raise RuntimeError(
                        f"J_c varies inside the N={N} lobe at r={r}: {prev} vs {j_c}"
                    )
            rows.append(LobePoint(float(mu), float(r), N, omega_c, j_c, j_gs))
    return rows
