"""Density-matrix evolution under a Lindblad master equation.

The generator is

    d rho / dt = -i [H(t), rho] + sum_b ( b rho b^dag - 1/2 {b^dag b, rho} )

with every jump operator ``b`` already scaled by the square root of its rate.
Hamiltonians are piecewise constant: ``H(t)`` may only change at the model's
``breakpoints``. Within a segment the superoperator is built once (sparse,
row-major vectorisation) and integrated with an adaptive Dormand-Prince 5(4)
stepper. Running integrals such as the cavity yield are appended to the
state vector so the step-size control also covers them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _dopri
from .errors import (
    ConvergenceError,
    IntegrationError,
    InvalidParameterError,
    StiffnessError,
    StructuralError,
)


@dataclass(frozen=True)
class CollapseOp:
    op: np.ndarray
    label: str = ""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    sample_interval: float | None = None
    max_steps: int = 200_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidParameterError("integrator tolerances must be positive")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise InvalidParameterError("sample_interval must be positive")


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian, jump operators and basis labels of an open system.

    ``hamiltonian(t)`` must be constant on every interval between consecutive
    ``breakpoints``.
    """

    hamiltonian: Callable[[float], np.ndarray]
    collapses: tuple
    basis_labels: tuple
    breakpoints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "collapses", tuple(self.collapses))
        object.__setattr__(self, "basis_labels", tuple(self.basis_labels))
        object.__setattr__(self, "breakpoints", tuple(sorted(self.breakpoints)))
        d = self.dim
        for c in self.collapses:
            if c.op.shape != (d, d):
                raise StructuralError(f"collapse {c.label!r} has shape {c.op.shape}, expected {(d, d)}")
        for t in (0.0,) + self.breakpoints:
            H = self.hamiltonian(t)
            if H.shape != (d, d):
                raise StructuralError(f"H({t}) has shape {H.shape}, expected {(d, d)}")
            scale = max(np.abs(H).max(), 1.0)
            if np.abs(H - H.conj().T).max() > 1e-12 * scale:
                raise StructuralError(f"H({t}) is not Hermitian")

    @property
    def dim(self):
        return len(self.basis_labels)

    def index(self, label):
        return self.basis_labels.index(label)

    def segment_edges(self, t0, t1):
        inner = [b for b in self.breakpoints if t0 < b < t1]
        return [t0, *inner, t1]


@dataclass
class Trajectory:
    """Sampled evolution: observables, running integrals and state diagnostics."""

    times: np.ndarray
    observables: dict
    accumulators: dict
    final_state: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    states: np.ndarray | None = None
    steps: int = 0
    stopped_early: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def final(self, name):
        if name in self.accumulators:
            return self.accumulators[name][-1]
        return self.observables[name][-1]


# --- generator --------------------------------------------------------------------


def _dissipator_parts(model):
    d = model.dim
    I = sp.identity(d, dtype=complex, format="csr")
    L = sp.csr_matrix((d * d, d * d), dtype=complex)
    for c in model.collapses:
        b = sp.csr_matrix(c.op)
        bdb = (b.conj().T @ b).tocsr()
        L = L + sp.kron(b, b.conj()) - 0.5 * sp.kron(bdb, I) - 0.5 * sp.kron(I, bdb.T)
    return L


def superoperator(model, t, _dissipator=None):
    """Sparse matrix of the generator acting on ``rho.ravel()`` at time t."""
    d = model.dim
    I = sp.identity(d, dtype=complex, format="csr")
    H = sp.csr_matrix(model.hamiltonian(t))
    L = -1j * (sp.kron(H, I) - sp.kron(I, H.T))
    D = _dissipator if _dissipator is not None else _dissipator_parts(model)
    return (L + D).tocsr()


def liouvillian_apply(model, rho, t=0.0):
    """d rho / dt evaluated directly in matrix form."""
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise StructuralError(f"rho has shape {rho.shape}, model dimension is {model.dim}")
    H = model.hamiltonian(t)
    out = -1j * (H @ rho - rho @ H)
    for c in model.collapses:
        b = c.op
        bd = b.conj().T
        bdb = bd @ b
        out += b @ rho @ bd - 0.5 * (bdb @ rho + rho @ bdb)
    return out


def _functional_rows(ops, d):
    """Rows r with r . vec(rho) = tr(O rho) for each operator."""
    return [np.asarray(O).T.reshape(d * d) for O in ops]


def augmented_generator(model, t, accumulators=(), _dissipator=None):
    """Generator with one extra row per accumulator operator: acc' = tr(A rho)."""
    d = model.dim
    L = superoperator(model, t, _dissipator)
    m = len(accumulators)
    if m == 0:
        return L
    rows = sp.csr_matrix(np.array(_functional_rows(accumulators, d)), dtype=complex)
    top = sp.hstack([L, sp.csr_matrix((d * d, m), dtype=complex)])
    bottom = sp.hstack([rows, sp.csr_matrix((m, m), dtype=complex)])
    return sp.vstack([top, bottom]).tocsr()


# --- diagnostics ------------------------------------------------------------------


def check_state(rho):
    """Trace deviation, Hermiticity deviation and smallest eigenvalue of rho."""
    rho = np.asarray(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    sym = 0.5 * (rho + rho.conj().T)
    return {
        "trace_dev": float(abs(np.trace(rho) - 1.0)),
        "hermiticity_dev": herm,
        "min_eigenvalue": float(np.linalg.eigvalsh(sym).min()),
    }


def pure_state(dim, index):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def projector(dim, index):
    return pure_state(dim, index)


# --- adaptive evolution -----------------------------------------------------------


def _sample_grid(t0, t1, interval):
    if not np.isfinite(t1):
        raise InvalidParameterError("t_span end must be finite")
    if interval is None:
        interval = (t1 - t0) / 500.0
    n = int(math.floor((t1 - t0) / interval + 1e-9))
    grid = t0 + interval * np.arange(n + 1)
    if t1 - grid[-1] > 1e-12 * max(abs(t1), 1.0):
        grid = np.append(grid, t1)
    else:
        grid[-1] = t1
    return grid


def _initial_step(csr):
    row_norm = np.abs(csr).sum(axis=1).max()
    return 0.1 / max(float(row_norm), 1e-300)


def evolve(
    model: LindbladModel,
    rho0,
    t_span: Sequence[float],
    config: IntegratorConfig | None = None,
    observables: Mapping[str, np.ndarray] | None = None,
    accumulators: Mapping[str, np.ndarray] | None = None,
    stop: Callable | None = None,
    store_states: bool = False,
    diagnostics: bool = True,
) -> Trajectory:
    """Integrate the master equation over ``t_span`` on a fixed sample grid.

    ``observables`` map names to operators sampled as Re tr(O rho).
    ``accumulators`` map names to operators A whose running integral
    int Re tr(A rho) dt is carried in the state. ``stop(t, rho, acc)`` is
    checked at every sample; the trajectory ends at the first sample where it
    returns True.
    """
    config = config or IntegratorConfig()
    observables = dict(observables or {})
    accumulators = dict(accumulators or {})
    rho0 = np.asarray(rho0, dtype=complex)
    d = model.dim
    if rho0.shape != (d, d):
        raise StructuralError(f"rho0 has shape {rho0.shape}, model dimension is {d}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise InvalidParameterError("t_span must be increasing")

    acc_names = list(accumulators)
    acc_ops = [accumulators[k] for k in acc_names]
    obs_rows = {k: r for k, r in zip(observables, _functional_rows(observables.values(), d))}
    grid = _sample_grid(t0, t1, config.sample_interval)

    dissipator = _dissipator_parts(model)
    cache = {}

    def generator_at(t):
        # H is constant per segment; key on the segment index
        key = int(np.searchsorted(model.breakpoints, t, side="right"))
        if key not in cache:
            cache[key] = augmented_generator(model, t, acc_ops, dissipator)
        return cache[key]

    y = np.zeros(d * d + len(acc_ops), dtype=complex)
    y[: d * d] = rho0.reshape(-1)

    times, obs_out, acc_out, diag_out, states = [], {k: [] for k in observables}, {k: [] for k in acc_names}, [], []

    def record(t):
        rho = y[: d * d].reshape(d, d)
        times.append(t)
        for k, r in obs_rows.items():
            obs_out[k].append(float((r @ y[: d * d]).real))
        for j, k in enumerate(acc_names):
            acc_out[k].append(float(y[d * d + j].real))
        if diagnostics:
            diag_out.append(check_state(rho))
        if store_states:
            states.append(rho.copy())
        return rho

    h = None
    total_steps = 0
    stopped = False
    rho = record(grid[0])
    if stop is not None and stop(grid[0], rho, y[d * d:].real):
        stopped = True
    for a, b in zip(grid[:-1], grid[1:]):
        if stopped:
            break
        edges = model.segment_edges(a, b)
        for s0, s1 in zip(edges[:-1], edges[1:]):
            L = generator_at(0.5 * (s0 + s1))
            if h is None:
                h = _initial_step(L)
            h_min = 1e-14 * max(abs(s1), abs(s1 - t0), 1e-300)
            t_reached, h, n, status = _dopri.advance(
                L.indptr, L.indices, L.data, y, s0, s1, h,
                config.rel_tol, config.abs_tol, config.max_step, h_min,
                config.max_steps - total_steps,
            )
            total_steps += n
            if status == _dopri.UNDERFLOW:
                raise StiffnessError(t_reached, h)
            if status == _dopri.BUDGET:
                raise IntegrationError(f"step budget of {config.max_steps} exhausted at t={t_reached:.6e}")
        rho = record(b)
        if stop is not None and stop(b, rho, y[d * d:].real):
            stopped = b < grid[-1]
            break

    diag = {}
    if diagnostics:
        diag = {k: np.array([x[k] for x in diag_out]) for k in diag_out[0]}
    return Trajectory(
        times=np.array(times),
        observables={k: np.array(v) for k, v in obs_out.items()},
        accumulators={k: np.array(v) for k, v in acc_out.items()},
        final_state=y[: d * d].reshape(d, d).copy(),
        diagnostics=diag,
        states=np.array(states) if store_states else None,
        steps=total_steps,
        stopped_early=stopped,
    )


# --- exact propagation for piecewise-constant generators ------------------------


def propagator(model, t, dt, accumulators=()):
    """exp(L dt) of the augmented generator valid at time t (dense)."""
    A = augmented_generator(model, t, accumulators).toarray()
    return scipy.linalg.expm(A * dt)


def quasi_steady_state(model, repump_rate, sources, target, tol=1e-9):
    """Fixed point of the model closed by repump jumps sources -> target.

    Solves L rho = 0 with tr rho = 1 directly and checks that the residual
    ||d rho/dt|| is below ``tol`` (relative to the generator norm).
    """
    if not repump_rate > 0:
        raise InvalidParameterError("repump rate must be positive")
    d = model.dim
    t_idx = model.index(target) if isinstance(target, str) else target
    extra = []
    for s in sources:
        s_idx = model.index(s) if isinstance(s, str) else s
        op = np.zeros((d, d), dtype=complex)
        op[t_idx, s_idx] = math.sqrt(repump_rate)
        extra.append(CollapseOp(op, f"repump {s_idx}->{t_idx}"))
    closed = LindbladModel(model.hamiltonian, model.collapses + tuple(extra), model.basis_labels, model.breakpoints)
    L = superoperator(closed, 0.0).toarray()
    trace_row = np.eye(d).reshape(-1)
    # replace one redundant equation by the trace condition
    M = np.vstack([L, trace_row])
    rhs = np.zeros(d * d + 1, dtype=complex)
    rhs[-1] = 1.0
    vec, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.abs(liouvillian_apply(closed, rho)).max()
    scale = max(np.abs(L).max(), 1.0)
    if residual > tol * scale or abs(np.trace(rho) - 1) > 1e-8:
        raise ConvergenceError(f"steady state residual {residual:.3e} exceeds tolerance")
    return rho
