"""Closed-form cavity photoassociation formulas.

All rates and detunings are angular frequencies in rad/s. Use :func:`mhz`
and :func:`to_mhz` at the boundary when quoting linear frequencies
(``nu = omega / 2 pi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy import constants

from .errors import InvalidParameterError, SingularParameterError

TWO_PI = 2.0 * math.pi


def mhz(nu):
    """Linear frequency in MHz -> angular frequency in rad/s."""
    return TWO_PI * 1e6 * nu


def to_mhz(omega):
    """Angular frequency in rad/s -> linear frequency in MHz."""
    return omega / (TWO_PI * 1e6)


def _require(cond, msg):
    if not cond:
        raise InvalidParameterError(msg)


@dataclass(frozen=True)
class TransitionSpec:
    """Molecular e <-> g transition.

    ``f_fc`` is the branching ratio Gamma_g / Gamma.
    """

    d_el: float
    wavelength: float
    gamma: float
    f_fc: float = 1.0

    def __post_init__(self):
        _require(self.d_el > 0, "d_el must be positive")
        _require(self.wavelength > 0, "wavelength must be positive")
        _require(self.gamma > 0, "Gamma must be positive")
        _require(0.0 <= self.f_fc <= 1.0, "f_fc must lie in [0, 1]")

    @property
    def omega(self):
        return TWO_PI * constants.c / self.wavelength

    @property
    def gamma_g(self):
        return self.f_fc * self.gamma

    @property
    def gamma_h(self):
        return (1.0 - self.f_fc) * self.gamma


@dataclass(frozen=True)
class CavityGeometry:
    length: float
    waist: float
    finesse: float

    def __post_init__(self):
        _require(self.length > 0, "cavity length must be positive")
        _require(self.waist > 0, "mode waist must be positive")
        _require(self.finesse > 1, "finesse must exceed 1")


@dataclass(frozen=True)
class SystemParams:
    """Rates and detunings of the five-level model, all in rad/s."""

    g: float
    kappa: float
    gamma_g: float
    gamma_h: float
    omega: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma_g", "gamma_h", "omega"):
            value = getattr(self, name)
            _require(np.isfinite(value) and value >= 0, f"{name} must be finite and >= 0")
        _require(np.isfinite(self.delta1) and np.isfinite(self.delta2), "detunings must be finite")
        _require(self.gamma_g + self.gamma_h > 0, "Gamma_g + Gamma_h must be positive")

    @property
    def gamma(self):
        return self.gamma_g + self.gamma_h

    @property
    def f_fc(self):
        return self.gamma_g / self.gamma

    @property
    def cooperativity(self):
        return cooperativity(self.g, self.kappa, self.gamma)

    @classmethod
    def from_cooperativity(cls, C, kappa, gamma, f_fc=1.0, **kw):
        """Build parameters with g chosen so that g^2/(kappa Gamma) = C."""
        _require(C >= 0, "cooperativity must be >= 0")
        g = math.sqrt(C * kappa * gamma)
        return cls(g=g, kappa=kappa, gamma_g=f_fc * gamma, gamma_h=(1 - f_fc) * gamma, **kw)

    def replace(self, **changes):
        fields = dict(
            g=self.g, kappa=self.kappa, gamma_g=self.gamma_g, gamma_h=self.gamma_h,
            omega=self.omega, delta1=self.delta1, delta2=self.delta2,
        )
        fields.update(changes)
        return SystemParams(**fields)


# --- cavity and coupling --------------------------------------------------------


def mode_volume(geometry):
    """TEM00 mode volume pi w0^2 L / 4 (m^3)."""
    return math.pi * geometry.waist**2 * geometry.length / 4.0


def coupling_gmax(transition, volume):
    """Closed two-level coupling d_el sqrt(omega_ge / (2 hbar eps0 V)) in rad/s.

    No polarization or orientation averaging factor is applied.
    """
    _require(volume > 0, "mode volume must be positive")
    return transition.d_el * math.sqrt(
        transition.omega / (2.0 * constants.hbar * constants.epsilon_0 * volume)
    )


def scale_by_fc(g_max, C_max, f_fc):
    _require(0.0 <= f_fc <= 1.0, "f_fc must lie in [0, 1]")
    return g_max * math.sqrt(f_fc), C_max * f_fc


def kappa_from_finesse(geometry):
    """Field decay rate pi c / (2 L F) of a Fabry-Perot cavity."""
    return math.pi * constants.c / (2.0 * geometry.length * geometry.finesse)


def cooperativity(g, kappa, gamma):
    _require(kappa > 0 and gamma > 0, "kappa and Gamma must be positive")
    return g * g / (kappa * gamma)


# --- efficiencies and rates -------------------------------------------------------


def eta_wd(C, delta2=0.0, kappa=None):
    """Weak-driving efficiency 2C / (2C + 1 + (delta2/kappa)^2)."""
    _require(C >= 0, "cooperativity must be >= 0")
    if delta2 == 0:
        detuning = 0.0
    else:
        _require(kappa is not None and kappa > 0, "kappa > 0 required when delta2 != 0")
        detuning = (delta2 / kappa) ** 2
    return 2 * C / (2 * C + 1 + detuning)


def rate_wd(omega, gamma, C):
    """Exponential decay rate Omega^2 / (Gamma (2C + 1)) of the quasi-dark state."""
    _require(gamma > 0, "Gamma must be positive")
    _require(C >= 0, "cooperativity must be >= 0")
    return omega**2 / (gamma * (2 * C + 1))


def rate_wd_high_c(omega, g, kappa):
    """Large-cooperativity form kappa Omega^2 / (2 g^2)."""
    return kappa * omega**2 / (2 * g * g)


def eta_pi(g, kappa, gamma):
    """Efficiency after an instantaneous pi pulse into |e,0> (resonant cavity)."""
    _require(g >= 0 and kappa > 0 and gamma > 0, "rates must be positive")
    C = cooperativity(g, kappa, gamma)
    return 2 * kappa / (2 * kappa + gamma) * eta_wd(C)


def pi_pulse_kappa_threshold(g, gamma, epsilon):
    """Smallest kappa for which a pi pulse keeps 1 - eta within (1 + eps)(1 - eta_wd)."""
    _require(epsilon > 0, "epsilon must be positive")
    _require(gamma > 0, "Gamma must be positive")
    x = g * g / (epsilon * gamma * gamma)
    # Gamma (sqrt(x + 1/16) - 1/4), rationalised to avoid cancellation for g << Gamma
    return gamma * x / (math.sqrt(x + 1.0 / 16.0) + 0.25)


def pi_pulse_kappa_threshold_numeric(g, gamma, epsilon, rtol=1e-13):
    """Root in kappa of (1 - eta_pi) = (1 + eps)(1 - eta_wd) by bracketed search.

    Serves as a check on :func:`pi_pulse_kappa_threshold`; the bracket is
    widened geometrically until the sign changes. Both inefficiencies are
    written without the 1 - eta cancellation, which otherwise limits the
    root to a few digits when g << Gamma:
    1 - eta_pi = (Gamma (2C + 1) + 2 kappa) / ((2 kappa + Gamma)(2C + 1)),
    1 - eta_wd = 1 / (2C + 1).
    """
    _require(epsilon > 0 and gamma > 0 and g > 0, "g, Gamma and epsilon must be positive")

    def excess(kappa):
        C = g * g / (kappa * gamma)
        ratio = (gamma * (2 * C + 1) + 2 * kappa) / (2 * kappa + gamma)
        return ratio - (1 + epsilon)

    lo, hi = gamma * 1e-6, gamma
    while excess(hi) > 0:
        hi *= 4.0
    while excess(lo) < 0:
        lo /= 4.0
    return scipy.optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)


def dark_state(params):
    """First-order quasi-dark state over (|i,0>, |e,0>, |g,1>), normalized.

    Valid for Omega << Gamma, g^2/kappa; the truncation at first order in
    Omega is not checked.
    """
    p = params
    denom = 2 * p.g**2 + (p.gamma - 2j * p.delta1) * (p.kappa - 1j * p.delta2)
    scale = max(p.g**2, p.gamma * p.kappa, p.gamma * abs(p.delta2), abs(p.delta1 * p.kappa), 1e-300)
    if abs(denom) <= 1e-14 * scale:
        raise SingularParameterError("2g^2 + (Gamma - 2i D1)(kappa - i D2) vanishes")
    amp = np.array(
        [1.0, p.omega * (1j * p.kappa + p.delta2) / denom, -p.omega * p.g / denom],
        dtype=complex,
    )
    return amp / np.linalg.norm(amp)
