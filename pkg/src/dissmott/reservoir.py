"""Reservoir spectral functions feeding the structured pump.

Three variants are supported:

* ``SquareReservoir`` -- a chemical-potential-like window, rate r*kappa for
  transition energies below ``mu_eff`` and zero above.
* ``LorentzianReservoir`` -- a finite-lifetime resonance of full width
  ``gamma`` centred at ``omega_res``.
* ``RedfieldSquareReservoir`` -- the complex response of the square window,
  whose real part carries a factor 1/2 (compensated by the two-sided
  structure of the Redfield dissipator) and whose imaginary part is the
  logarithmic Lamb shift.

The returned ``rate`` is the *full* pump prefactor: r*kappa is absorbed into
``pump_scale`` here and is never multiplied in again by the generator
builders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import SingularPoint
from .fock import ModelParams

LOG_CLIP = 1e-9  # branch-point clip for the Lamb-shift logarithm, in units of U


@dataclass(frozen=True)
class SquareReservoir:
    mu_eff: float
    pump_scale: float

    @classmethod
    def from_model(cls, params: ModelParams) -> "SquareReservoir":
        return cls(mu_eff=params.mu_eff, pump_scale=params.pump_scale)


@dataclass(frozen=True)
class LorentzianReservoir:
    omega_res: float
    gamma: float
    pump_scale: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @classmethod
    def from_model(cls, params: ModelParams, omega_res: float, gamma: float) -> "LorentzianReservoir":
        return cls(omega_res=omega_res, gamma=gamma, pump_scale=params.pump_scale)


@dataclass(frozen=True)
class RedfieldSquareReservoir:
    mu_eff: float
    omega0: float
    pump_scale: float

    @classmethod
    def from_model(cls, params: ModelParams) -> "RedfieldSquareReservoir":
        return cls(mu_eff=params.mu_eff, omega0=params.omega0, pump_scale=params.pump_scale)


ReservoirSpec = Union[SquareReservoir, LorentzianReservoir, RedfieldSquareReservoir]


def _step(x):
    """Heaviside with theta(0) = 0, making the square rate right-continuous."""
    return np.where(np.asarray(x) > 0, 1.0, 0.0)


def rate(spec: ReservoirSpec, omega):
    """Pump rate density entering the dissipator at transition energy omega.

    Scalar in, scalar out; arrays broadcast elementwise.
    """
    w = np.asarray(omega, dtype=float)
    if isinstance(spec, SquareReservoir):
        out = spec.pump_scale * _step(spec.mu_eff - w)
    elif isinstance(spec, LorentzianReservoir):
        half = spec.gamma / 2.0
        out = spec.pump_scale * half**2 / ((w - spec.omega_res) ** 2 + half**2)
    elif isinstance(spec, RedfieldSquareReservoir):
        out = spec.pump_scale / 2.0 * _step(spec.mu_eff - w) * _step(w + spec.omega0)
    else:
        raise TypeError(f"unknown reservoir spec {spec!r}")
    return out if out.ndim else float(out)


def response(spec: RedfieldSquareReservoir, omega: float, clip: float = LOG_CLIP) -> complex:
    """Dimensionless complex reservoir response S(omega) of the square window.

    Re S = theta(mu_eff - omega) * theta(omega + omega0) / 2 and
    Im S = log|(mu_eff - omega)/(omega0 + omega)| / (2 pi). The full pump
    dissipator multiplies this by ``pump_scale``.

    Raises
    ------
    SingularPoint
        If omega is within ``clip`` of either branch point of the logarithm.
    """
    if not isinstance(spec, RedfieldSquareReservoir):
        raise TypeError("response is defined for RedfieldSquareReservoir only")
    d_mu = spec.mu_eff - omega
    d_w0 = spec.omega0 + omega
    if abs(d_mu) < clip or abs(d_w0) < clip:
        raise SingularPoint(
            f"omega = {omega} is within {clip} of a branch point "
            f"(mu_eff = {spec.mu_eff}, -omega0 = {-spec.omega0})"
        )
    re = 0.5 * float(_step(d_mu) * _step(d_w0))
    im = np.log(abs(d_mu / d_w0)) / (2.0 * np.pi)
    return re + 1j * im


def lamb_shift(spec: ReservoirSpec, omega: float, clip: float = LOG_CLIP) -> float:
    """Lamb-shift rate (pump_scale/pi) log|(mu_eff-omega)/(omega0+omega)|.

    Zero for reservoir variants that define no Lamb shift.
    """
    if not isinstance(spec, RedfieldSquareReservoir):
        return 0.0
    return 2.0 * spec.pump_scale * response(spec, omega, clip=clip).imag
