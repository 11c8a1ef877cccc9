"""Fastest square PA pulse whose inefficiency stays within (1 + eps) of the weak-drive limit.

For a trial Rabi frequency the pulse length is fixed by the 99.9 % transfer
rule, so the search is one-dimensional in Omega. The inefficiency is
measured on the pairs that left |i,0> during the pulse (the 1e-3 left behind
is unreacted, not lost). Trials use exact propagation, which stays cheap
even for the slow weak-drive end of the bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics, single_pair
from .errors import CavChemError, ConstraintInfeasibleError, InvalidParameterError

OMEGA_LO_FACTOR = 1 / 100
OMEGA_HI_FACTOR = 2.0**10
REL_PRECISION = 0.01
CONSTRAINT_SLACK = 1e-3


@dataclass(frozen=True)
class Trial:
    omega: float
    t_p: float
    eta: float
    eta_cavity: float
    inefficiency: float
    feasible: bool


@dataclass(frozen=True)
class PulseOptimum:
    omega_star: float
    t_p_star: float
    eta: float
    eta_wd_ref: float
    epsilon: float
    eta_cavity: float = math.nan
    unbounded: bool = False
    fallback: bool = False
    trials: tuple = field(default=(), repr=False)

    @property
    def inefficiency(self):
        return 1.0 - self.eta

    @property
    def limit(self):
        return (1 + self.epsilon) * (1 - self.eta_wd_ref)


@dataclass(frozen=True)
class ScanRow:
    f_fc: float
    kappa: float
    omega_star: float
    t_p_star: float
    inefficiency: float
    status: str = "ok"


def evaluate(params, omega):
    """One trial: pulse length from the transfer rule, efficiency by exact propagation."""
    t_p = single_pair.transfer_time_99_9(params, omega, method="exact")
    res = single_pair.square_pulse_efficiency_exact(params, omega, t_p)
    return t_p, res


def optimize_pulse(params_base, epsilon):
    """Largest Omega (and its t_p) with 1 - eta <= (1 + eps)(1 - eta_wd).

    Bisection on log2(Omega) between kappa/100 and the first infeasible
    doubling of kappa, to 1 % in Omega. Monotonicity of the inefficiency is
    checked on the evaluated trials; if violated a dense log grid is scanned
    instead.
    """
    if not epsilon > 0:
        raise InvalidParameterError("epsilon must be positive")
    p = params_base
    if p.delta1 != 0 or p.delta2 != 0:
        raise InvalidParameterError("pulse optimisation assumes resonant drive (delta1 = delta2 = 0)")
    eta_ref = analytics.eta_wd(p.cooperativity)
    limit = (1 + epsilon) * (1 - eta_ref)
    trials = {}

    def trial(omega):
        if omega not in trials:
            t_p, res = evaluate(p, omega)
            eta = res.eta_transferred
            trials[omega] = Trial(omega, t_p, eta, res.eta_cavity, 1 - eta, 1 - eta <= limit)
        return trials[omega]

    lo = p.kappa * OMEGA_LO_FACTOR
    omega_max = p.kappa * OMEGA_HI_FACTOR
    first = trial(lo)
    if not first.feasible:
        raise ConstraintInfeasibleError(
            f"Omega = kappa/100 already gives 1 - eta = {first.inefficiency:.4g} "
            f"> (1 + eps)(1 - eta_wd) = {limit:.4g}"
        )
    hi = p.kappa
    while trial(hi).feasible and hi < omega_max:
        lo, hi = hi, min(2 * hi, omega_max)
    unbounded = trial(hi).feasible
    if unbounded:
        lo = hi
    else:
        while hi / lo > 1 + REL_PRECISION:
            mid = math.sqrt(lo * hi)
            if trial(mid).feasible:
                lo = mid
            else:
                hi = mid

    fallback = not _monotone(trials.values())
    if fallback:
        lo, unbounded = _grid_search(trial, p.kappa * OMEGA_LO_FACTOR, omega_max)

    best = trial(lo)
    return PulseOptimum(
        omega_star=best.omega, t_p_star=best.t_p, eta=best.eta, eta_wd_ref=eta_ref,
        epsilon=epsilon, eta_cavity=best.eta_cavity, unbounded=unbounded,
        fallback=fallback, trials=tuple(sorted(trials.values(), key=lambda t: t.omega)),
    )


def _monotone(trials):
    ordered = sorted(trials, key=lambda t: t.omega)
    ineff = np.array([t.inefficiency for t in ordered])
    return bool(np.all(np.diff(ineff) >= -1e-9))


def _grid_search(trial, lo, hi, points=64):
    grid = np.geomspace(lo, hi, points)
    feasible = [w for w in grid if trial(w).feasible]
    best = max(feasible)
    if best == grid[-1]:
        return best, True
    upper = grid[np.searchsorted(grid, best) + 1]
    while upper / best > 1 + REL_PRECISION:
        mid = math.sqrt(best * upper)
        if trial(mid).feasible:
            best = mid
        else:
            upper = mid
    return best, False


def scan_kappa(f_fc_list, kappa_grid, epsilon, g_max, gamma):
    """Optimise every (f_fc, kappa) point; rows in grid order, failures recorded in-row."""
    if len(f_fc_list) == 0 or len(kappa_grid) == 0:
        raise InvalidParameterError("scan grids must be non-empty")
    rows = []
    for f_fc in f_fc_list:
        g, _ = analytics.scale_by_fc(g_max, 0.0, f_fc)
        for kappa in kappa_grid:
            params = analytics.SystemParams(
                g=g, kappa=kappa, gamma_g=f_fc * gamma, gamma_h=(1 - f_fc) * gamma
            )
            try:
                opt = optimize_pulse(params, epsilon)
            except CavChemError as exc:
                rows.append(ScanRow(f_fc, kappa, math.nan, math.nan, math.nan, f"error: {exc}"))
                continue
            status = "unbounded" if opt.unbounded else "ok"
            rows.append(ScanRow(f_fc, kappa, opt.omega_star, opt.t_p_star, opt.inefficiency, status))
    return rows
