"""N four-level molecules (levels i, e, g, h) sharing one cavity mode, N <= 3."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import lindblad
from .errors import ConvergenceError, StructuralError, UnsupportedSizeError
from .lindblad import CollapseOp, IntegratorConfig, LindbladModel

MAX_MOLECULES = 3
LEVELS = ("i", "e", "g", "h")
LI, LE, LG, LH = range(4)
RESIDUAL_THRESHOLD = 1e-8
COLUMNS = ("mean_excited", "mean_photon", "cavity_yield_cumulative")


@dataclass(frozen=True)
class CollectiveBasis:
    """Product basis, molecule 1 slowest and photon number fastest."""

    n_molecules: int
    n_max: int | None = None

    def __post_init__(self):
        if not 1 <= self.n_molecules <= MAX_MOLECULES:
            raise UnsupportedSizeError(
                f"collective model supports 1..{MAX_MOLECULES} molecules, got {self.n_molecules}"
            )
        if self.n_max is None:
            object.__setattr__(self, "n_max", self.n_molecules)

    @property
    def dim(self):
        return 4**self.n_molecules * (self.n_max + 1)

    @property
    def labels(self):
        out = []
        for mols in itertools.product(LEVELS, repeat=self.n_molecules):
            for n in range(self.n_max + 1):
                out.append("".join(mols) + f",{n}")
        return tuple(out)

    def index(self, levels, photons):
        idx = 0
        for lv in levels:
            idx = idx * 4 + lv
        return idx * (self.n_max + 1) + photons

    def decode(self, index):
        photons = index % (self.n_max + 1)
        rest = index // (self.n_max + 1)
        levels = []
        for _ in range(self.n_molecules):
            levels.append(rest % 4)
            rest //= 4
        return tuple(reversed(levels)), photons


@dataclass(frozen=True)
class CollectiveObservables:
    mean_excited: np.ndarray
    mean_photon: np.ndarray
    cavity_yield_per_molecule: float
    direct_g_population: float


def _local(op, j, n):
    """Embed a 4x4 molecular operator at site j of n molecules (photon part excluded)."""
    mats = [np.eye(4)] * n
    mats[j] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def operators(basis):
    """Annihilation operator and per-molecule sigma_ab on the full product space."""
    n, nph = basis.n_molecules, basis.n_max + 1
    a = np.diag(np.sqrt(np.arange(1, nph)), k=1)
    a_full = np.kron(np.eye(4**n), a)

    def sigma(j, to, frm):
        s = np.zeros((4, 4))
        s[to, frm] = 1.0
        return np.kron(_local(s, j, n), np.eye(nph))

    return a_full, sigma


def build_collective(n, params, omega=0.0, n_max=None):
    """Tavis-Cummings model of n molecules, identical coupling g."""
    basis = CollectiveBasis(n, n_max)
    a, sigma = operators(basis)
    ad = a.conj().T
    H = params.delta2 * (ad @ a)
    for j in range(n):
        H = H + params.delta1 * sigma(j, LE, LE)
        H = H + omega / 2 * (sigma(j, LE, LI) + sigma(j, LI, LE))
        H = H + params.g * (ad @ sigma(j, LG, LE) + sigma(j, LE, LG) @ a)
    H = H.astype(complex)
    collapses = [CollapseOp(math.sqrt(2 * params.kappa) * a.astype(complex), "cavity")]
    for j in range(n):
        collapses.append(CollapseOp(math.sqrt(params.gamma_g) * sigma(j, LG, LE).astype(complex), f"gamma_g[{j}]"))
        collapses.append(CollapseOp(math.sqrt(params.gamma_h) * sigma(j, LH, LE).astype(complex), f"gamma_h[{j}]"))
    return LindbladModel(lambda t: H, collapses, basis.labels)


def initial_excited(basis, order=None):
    """All molecules in |e>, cavity empty. ``order`` permutes the molecule labels."""
    levels = [LE] * basis.n_molecules
    if order is not None:
        levels = [levels[k] for k in order]
    return lindblad.pure_state(basis.dim, basis.index(levels, 0))


def observable_ops(basis, params):
    n = basis.n_molecules
    a, sigma = operators(basis)
    num = a.conj().T @ a
    exc = sum(sigma(j, LE, LE) for j in range(n)) / n
    gpop = sum(sigma(j, LG, LG) for j in range(n)) / n
    obs = {"mean_excited": exc, "mean_photon": num, "mean_g": gpop}
    acc = {"cavity_photons": 2 * params.kappa * num}
    return obs, acc


def _horizon(params, n):
    rates = [params.gamma]
    if params.kappa > 0:
        rates.append(params.kappa)
    slow = min(rates)
    return 40.0 / slow


def run_collective_decay(n, params, config=None, sample_interval=None, diagnostics=True, order=None, n_max=None):
    """Decay of |e...e, 0> with the drive off; returns (Trajectory, CollectiveObservables)."""
    model = build_collective(n, params, 0.0, n_max)
    basis = CollectiveBasis(n, n_max)
    obs, acc = observable_ops(basis, params)
    horizon = _horizon(params, n)
    cfg = config or IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12)
    dt = sample_interval or cfg.sample_interval or horizon / 1000
    cfg = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, dt, cfg.max_steps)
    exc_tot = obs["mean_excited"] * n + obs["mean_photon"]
    exc_diag = np.real(np.diag(exc_tot))

    def stop(t, rho, accv):
        return float(np.real(np.diag(rho)) @ exc_diag) < RESIDUAL_THRESHOLD

    traj = lindblad.evolve(
        model, initial_excited(basis, order), (0.0, horizon), cfg,
        observables=obs, accumulators=acc, stop=stop, diagnostics=diagnostics,
    )
    traj.observables["cavity_yield_cumulative"] = traj.accumulators["cavity_photons"] / n
    summary = CollectiveObservables(
        mean_excited=traj.observables["mean_excited"],
        mean_photon=traj.observables["mean_photon"],
        cavity_yield_per_molecule=collective_yield(traj, n),
        direct_g_population=float(traj.observables["mean_g"][-1]) - collective_yield(traj, n),
    )
    return traj, summary


def collective_yield(trajectory, n):
    """Per-molecule cavity yield 2 kappa int <a^dag a> dt / N."""
    if "cavity_photons" not in trajectory.accumulators:
        raise StructuralError("trajectory carries no cavity_photons accumulator")
    return float(trajectory.accumulators["cavity_photons"][-1]) / n


def decay_rate(trajectory, level=math.exp(-1)):
    """Inverse of the time at which mean_excited first falls to ``level``."""
    exc = trajectory.observables["mean_excited"]
    t = trajectory.times
    k = int(np.argmax(exc <= level))
    if exc[k] > level:
        raise StructuralError("mean_excited never reaches the requested level")
    # linear interpolation between bracketing samples
    t_cross = t[k - 1] + (exc[k - 1] - level) / (exc[k - 1] - exc[k]) * (t[k] - t[k - 1])
    return -math.log(level) / t_cross


def driven_yield(n, params, omega, t_end, n_max=None, config=None):
    """Per-molecule cavity yield after driving |i...i, 0> with ``omega`` for ``t_end``."""
    basis = CollectiveBasis(n, n_max)
    model = build_collective(n, params, omega, basis.n_max)
    _, acc = observable_ops(basis, params)
    rho0 = lindblad.pure_state(basis.dim, basis.index([LI] * n, 0))
    cfg = config or IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13)
    traj = lindblad.evolve(model, rho0, (0.0, t_end), cfg, accumulators=acc, diagnostics=False)
    return collective_yield(traj, n)


def converged_cutoff(n, params, omega, t_end, tol=1e-6, limit=None):
    """Smallest photon cutoff >= n whose driven yield moves by < tol when raised by one."""
    limit = limit or n + 3
    k = n
    prev = driven_yield(n, params, omega, t_end, k)
    while k < limit:
        nxt = driven_yield(n, params, omega, t_end, k + 1)
        if abs(nxt - prev) < tol:
            return k, prev
        k, prev = k + 1, nxt
    raise ConvergenceError(f"photon cutoff not converged up to n_max={limit}")
