"""Self-consistent mean-field dynamics, limit-cycle detection and Wigner maps.

The lattice enters the single-site problem only through the coherent drive
phi(t) = -J <a(t)>, evaluated from the instantaneous state at every
integrator stage. The drive-free generator (loss + structured pump) is fixed
at J = 0 during the evolution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import PositivityLoss, StepFailure, TruncationWarning
from .fock import FockSpace, ModelParams, annihilation, creation
from .liouvillian import Superoperator, drive_superops, unvec, vec

POSITIVITY_TOL = -1e-6  # min eigenvalue below this triggers PositivityLoss


@dataclass(frozen=True)
class EvolveControls:
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "DOP853"
    store_points: int | None = None  # None: ~2 / U spacing (resolves U-scale phases)
    store_states: bool = False


@dataclass(frozen=True)
class ClassifyControls:
    amplitude_floor: float = 1e-4
    drift_tol: float = 1e-2
    window_fraction: float = 0.25


@dataclass(frozen=True)
class TrajectoryRecord:
    """Stored observables along one mean-field trajectory.

    ``times`` are in units of 1/kappa; ``kappa`` is kept so frequencies can
    be converted back to energy units.
    """

    times: np.ndarray
    order_parameter: np.ndarray
    density: np.ndarray
    populations: np.ndarray      # (n_times, dim)
    min_eigenvalue: np.ndarray
    kappa: float
    J: float
    states: np.ndarray | None = None   # (n_times, dim, dim) when requested

    def state_at(self, t_kappa: float) -> np.ndarray:
        """Stored density matrix closest to the requested time (1/kappa units)."""
        if self.states is None:
            raise ValueError("trajectory was run without store_states")
        return self.states[int(np.argmin(np.abs(self.times - t_kappa)))]

    def write_csv(self, path):
        dim = self.populations.shape[1]
        cols = ["t", "re_a", "im_a", "n"] + [f"p{k}" for k in range(dim)] + ["min_eig"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i, t in enumerate(self.times):
                row = [t, self.order_parameter[i].real, self.order_parameter[i].imag,
                       self.density[i], *self.populations[i], self.min_eigenvalue[i]]
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


@dataclass(frozen=True)
class LimitCycleReport:
    phase: str                  # "mott" | "limit_cycle" | "undecided"
    amplitude: float
    frequency: float            # energy units; nan unless a cycle was found
    transient_end: float        # units of 1/kappa


def evolve(
    L0: Superoperator,
    params: ModelParams,
    rho0: np.ndarray,
    t_end: float,
    controls: EvolveControls | None = None,
) -> TrajectoryRecord:
    """Integrate d rho/dt = L0 rho - i [phi* a + phi a^dag, rho], phi = -J <a>.

    ``t_end`` is in inverse energy units (1/U); the stored time axis is in
    units of 1/kappa. Raises StepFailure if the adaptive controller gives up;
    emits PositivityLoss (a warning) when the state develops eigenvalues
    below -1e-6, the documented behaviour of the Redfield variant inside the
    limit-cycle phase.
    """
    controls = controls or EvolveControls()
    space = L0.space
    a_row = vec(annihilation(space).T)
    ca, cad = drive_superops(space)
    lmat = L0.matrix
    j_hop = params.J

    def rhs(_t, y):
        phi = -j_hop * (a_row @ y)
        return lmat @ y + np.conj(phi) * (ca @ y) + phi * (cad @ y)

    n_store = controls.store_points
    if n_store is None:
        n_store = int(min(20001, max(2001, np.ceil(t_end * params.U / 2.0) + 1)))
    t_eval = np.linspace(0.0, t_end, n_store)
    sol = solve_ivp(
        rhs, (0.0, t_end), vec(rho0).astype(complex),
        t_eval=t_eval, method=controls.method,
        rtol=controls.rtol, atol=controls.atol,
    )
    if not sol.success:
        raise StepFailure(sol.message)

    dim = space.dim
    n_t = t_eval.size
    a_op = annihilation(space)
    order = np.empty(n_t, dtype=complex)
    density = np.empty(n_t)
    pops = np.empty((n_t, dim))
    min_eig = np.empty(n_t)
    states = np.empty((n_t, dim, dim), dtype=complex) if controls.store_states else None
    occ = np.arange(dim)
    for i in range(n_t):
        rho = unvec(sol.y[:, i], dim)
        herm = (rho + rho.conj().T) / 2.0
        order[i] = np.trace(a_op @ rho)
        pops[i] = np.real(np.diag(rho))
        density[i] = float(pops[i] @ occ)
        min_eig[i] = scipy.linalg.eigvalsh(herm)[0]
        if states is not None:
            states[i] = rho
    if min_eig.min() < POSITIVITY_TOL:
        warnings.warn(
            f"state lost positivity (min eigenvalue {min_eig.min():.2e})",
            PositivityLoss,
            stacklevel=2,
        )
    return TrajectoryRecord(
        times=t_eval * params.kappa,
        order_parameter=order,
        density=density,
        populations=pops,
        min_eigenvalue=min_eig,
        kappa=params.kappa,
        J=params.J,
        states=states,
    )


def _trailing_window(traj: TrajectoryRecord, fraction: float) -> slice:
    start = int(np.ceil(len(traj.times) * (1.0 - fraction)))
    return slice(start, None)


def classify_phase(
    traj: TrajectoryRecord, controls: ClassifyControls | None = None
) -> LimitCycleReport:
    """Mott vs limit cycle from the trailing part of the trajectory.

    Mott: trailing max |<a>| below the amplitude floor. Limit cycle: the
    amplitude is stationary (std/mean below the drift tolerance) above the
    floor; the frequency comes from a linear fit to the unwrapped phase.
    Anything else is undecided.
    """
    controls = controls or ClassifyControls()
    win = _trailing_window(traj, controls.window_fraction)
    a_w = traj.order_parameter[win]
    t_phys = traj.times[win] / traj.kappa
    amp = np.abs(a_w)
    transient_end = float(traj.times[win][0])
    if amp.max() < controls.amplitude_floor:
        return LimitCycleReport("mott", float(amp.max()), float("nan"), transient_end)
    mean = float(amp.mean())
    if amp.std() / mean < controls.drift_tol:
        phase = np.unwrap(np.angle(a_w))
        slope = np.polyfit(t_phys, phase, 1)[0]
        # <a(t)> rotates as exp(-i omega t) in this frame; report omega > 0
        return LimitCycleReport("limit_cycle", mean, float(-slope), transient_end)
    return LimitCycleReport("undecided", mean, float("nan"), transient_end)


def amplitude_growth_rate(traj: TrajectoryRecord, controls: ClassifyControls | None = None) -> float:
    """Log-linear growth rate of |<a>| over the trailing window (energy units)."""
    controls = controls or ClassifyControls()
    win = _trailing_window(traj, controls.window_fraction)
    amp = np.abs(traj.order_parameter[win])
    t_phys = traj.times[win] / traj.kappa
    good = amp > 0
    return float(np.polyfit(t_phys[good], np.log(amp[good]), 1)[0])


def onset_time(traj: TrajectoryRecord, level: float = 0.5) -> float:
    """Time (1/kappa units) where |<a>| first reaches ``level`` of its maximum."""
    amp = np.abs(traj.order_parameter)
    idx = int(np.argmax(amp >= level * amp.max()))
    return float(traj.times[idx])


# ---------------------------------------------------------------------------
# dynamics-based critical hopping


def critical_hopping_dynamics(
    L0: Superoperator,
    params: ModelParams,
    rho0: np.ndarray,
    j_bracket: tuple[float, float],
    t_end: float,
    iterations: int = 12,
    evolve_controls: EvolveControls | None = None,
    classify_controls: ClassifyControls | None = None,
):
    """Bisect the hopping on the Mott vs limit-cycle classification.

    Undecided trajectories near the boundary are resolved by the sign of the
    trailing amplitude growth rate. Returns a CriticalPoint (method
    "dynamics", uncertainty = final bracket width) built from the last
    unstable endpoint's cycle frequency.
    """
    from dataclasses import replace

    from .critical import CriticalPoint
    from .fock import target_filling

    def unstable(j: float):
        traj = evolve(L0, replace(params, J=j), rho0, t_end, evolve_controls)
        report = classify_phase(traj, classify_controls)
        if report.phase == "limit_cycle":
            return True, report
        if report.phase == "mott":
            return False, report
        return amplitude_growth_rate(traj, classify_controls) > 0, report

    lo, hi = j_bracket
    lo_unstable, _ = unstable(lo)
    hi_unstable, hi_report = unstable(hi)
    if lo_unstable or not hi_unstable:
        raise ValueError(
            f"bracket ({lo:g}, {hi:g}) does not straddle the boundary: "
            f"lo unstable={lo_unstable}, hi unstable={hi_unstable}"
        )
    freq = hi_report.frequency
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        mid_unstable, report = unstable(mid)
        if mid_unstable:
            hi = mid
            if not np.isnan(report.frequency):
                freq = report.frequency
        else:
            lo = mid
    return CriticalPoint(
        omega_c=float(freq),
        J_c=0.5 * (lo + hi),
        method="dynamics",
        filling=target_filling(params.mu_eff, params.U),
        uncertainty=hi - lo,
    )


# ---------------------------------------------------------------------------
# Wigner function


@dataclass(frozen=True)
class WignerGrid:
    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray  # (len(xs), len(ps))

    def integral(self) -> float:
        return float(np.trapz(np.trapz(self.values, self.ps, axis=1), self.xs))

    def min(self) -> float:
        return float(self.values.min())

    def write_csv(self, path_prefix):
        np.savetxt(f"{path_prefix}_w.csv", self.values, delimiter=",", fmt="%.17g")
        np.savetxt(f"{path_prefix}_x.csv", self.xs, delimiter=",", fmt="%.17g")
        np.savetxt(f"{path_prefix}_p.csv", self.ps, delimiter=",", fmt="%.17g")


def _displacement_element(n: int, m: int, gamma: np.ndarray) -> np.ndarray:
    """Exact <n|D(gamma)|m> on an array of displacements (Laguerre form)."""
    import math

    from scipy.special import eval_genlaguerre

    if n < m:
        return _displacement_element(m, n, -np.conj(gamma))
    k = n - m
    g2 = np.abs(gamma) ** 2
    pref = math.exp(0.5 * (math.lgamma(m + 1) - math.lgamma(n + 1)))
    return pref * gamma**k * np.exp(-g2 / 2.0) * eval_genlaguerre(m, k, g2)


def wigner(rho: np.ndarray, grid: tuple = ((-3.0, 3.0), (-3.0, 3.0), 101)) -> WignerGrid:
    """Displaced-parity Wigner map W(x, p) = tr[D(beta)^dag rho D(beta) P]/pi.

    beta = (x + i p)/sqrt(2); normalized so a unit-trace state integrates to
    one over dx dp and the vacuum gives W(0, 0) = 1/pi. Evaluated through the
    identity D(beta) P D(beta)^dag = D(2 beta) P with exact displacement
    matrix elements, so the map carries no displacement-truncation error.
    Still warns when the grid reaches displacements (|beta|^2 > nmax/2) that
    a state produced by truncated dynamics cannot populate faithfully.
    """
    (x_lo, x_hi), (p_lo, p_hi), n_pts = grid
    dim = rho.shape[0]
    space = FockSpace(dim - 1)
    xs = np.linspace(x_lo, x_hi, n_pts)
    ps = np.linspace(p_lo, p_hi, n_pts)
    beta_max2 = (max(abs(x_lo), abs(x_hi)) ** 2 + max(abs(p_lo), abs(p_hi)) ** 2) / 2.0
    if beta_max2 > space.nmax / 2.0:
        warnings.warn(
            f"grid corner |beta|^2 = {beta_max2:.2f} exceeds nmax/2 = {space.nmax / 2}",
            TruncationWarning,
            stacklevel=2,
        )
    x_mesh, p_mesh = np.meshgrid(xs, ps, indexing="ij")
    gamma = np.sqrt(2.0) * (x_mesh + 1j * p_mesh)  # 2 beta
    vals = np.zeros((n_pts, n_pts), dtype=complex)
    for n in range(dim):
        for m in range(dim):
            if rho[m, n] == 0:
                continue
            vals += rho[m, n] * (-1.0) ** m * _displacement_element(n, m, gamma)
    return WignerGrid(xs=xs, ps=ps, values=vals.real / np.pi)


def rotated_state(rho: np.ndarray, theta: float) -> np.ndarray:
    """Phase-space rotation by theta: exp(-i theta n) rho exp(+i theta n)."""
    phase = np.exp(-1j * theta * np.arange(rho.shape[0]))
    return (phase[:, None] * rho) * phase.conj()[None, :]


def rotational_asymmetry(rho: np.ndarray, grid: tuple, angles=(0.5, 1.0, 2.0)) -> float:
    """Max over rotation angles of max |W(rho) - W(rotated rho)| on the grid."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        base = wigner(rho, grid).values
        diffs = [
            np.abs(wigner(rotated_state(rho, th), grid).values - base).max()
            for th in angles
        ]
    return float(max(diffs))
