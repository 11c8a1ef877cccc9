"""Independent oracles for the evolution engine.

Nothing here reuses the sparse superoperator or the adaptive stepper of
:mod:`cavchem.lindblad`: the fixed-step reference integrates the matrix
form of the master equation with classical RK4, and the delta-pulse oracle
is a closed form derived from the amplitude equations.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse as sp

from . import analytics, lindblad, single_pair
from .errors import StepTooLargeError
from .lindblad import Trajectory


@dataclass(frozen=True)
class OracleReport:
    name: str
    inputs: str
    engine: float
    oracle: float
    rel_error: float
    tolerance: float

    @property
    def passed(self):
        return self.rel_error <= self.tolerance

    @classmethod
    def compare(cls, name, inputs, engine, oracle, tolerance):
        rel = abs(engine - oracle) / max(abs(oracle), 1e-300)
        return cls(name, digest(inputs), float(engine), float(oracle), float(rel), tolerance)


def digest(inputs):
    text = repr(sorted(inputs.items())) if isinstance(inputs, dict) else repr(inputs)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# --- delta pulse -----------------------------------------------------------------


def delta_pulse_exact(g, kappa, gamma):
    """Cavity yield 2 kappa int |c_g1|^2 dt after starting in |e,0>.

    With x = (c_e, c_g1), x' = A x, A = [[-Gamma/2, -i g], [-i g, -kappa]],
    the Gramian P = int x x^dag dt solves A P + P A^dag = -x0 x0^dag.
    Writing P = [[p, q], [q*, r]] and eliminating q gives
    r = g^2 / ((kappa + Gamma/2)(g^2 + kappa Gamma/2)) / 2,
    hence eta = 2 kappa r.
    """
    return kappa * g * g / ((kappa + gamma / 2) * (g * g + kappa * gamma / 2))


def delta_pulse_gramian(g, kappa, gamma):
    """Same quantity from a numerical Lyapunov solve (cross-check of the algebra)."""
    A = np.array([[-gamma / 2, -1j * g], [-1j * g, -kappa]])
    P = scipy.linalg.solve_continuous_lyapunov(A, -np.diag([1.0, 0.0]).astype(complex))
    return 2 * kappa * P[1, 1].real


# --- fixed-step reference ----------------------------------------------------------


def _rhs(H, jumps, rho):
    out = -1j * (H @ rho - rho @ H)
    for b, bd, bdb in jumps:
        out = out + b @ rho @ bd - 0.5 * (bdb @ rho + rho @ bdb)
    return out


def fixed_step_reference(model, rho0, dt, t_end, accumulators=None, observables=None, every=1):
    """Classical RK4 with constant step in matrix form.

    Steps are shrunk so that every model breakpoint falls on a step edge.
    ``every`` sets the sampling stride in steps.
    """
    accumulators = dict(accumulators or {})
    observables = dict(observables or {})
    jumps = [(c.op, c.op.conj().T, c.op.conj().T @ c.op) for c in model.collapses]
    edges = [0.0] + [b for b in model.breakpoints if 0 < b < t_end] + [t_end]
    rho = np.array(rho0, dtype=complex)
    acc = {k: 0.0 for k in accumulators}
    times, obs_out, acc_out = [0.0], {k: [np.trace(O @ rho).real] for k, O in observables.items()}, {k: [0.0] for k in acc}
    t = 0.0
    count = 0
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil((b - a) / dt))
        h = (b - a) / n
        H = model.hamiltonian(0.5 * (a + b))
        for i in range(n):
            k1 = _rhs(H, jumps, rho)
            k2 = _rhs(H, jumps, rho + 0.5 * h * k1)
            k3 = _rhs(H, jumps, rho + 0.5 * h * k2)
            k4 = _rhs(H, jumps, rho + h * k3)
            for name, A in accumulators.items():
                f = [np.trace(A @ x).real for x in (rho, rho + 0.5 * h * k1, rho + 0.5 * h * k2, rho + h * k3)]
                acc[name] += h / 6 * (f[0] + 2 * f[1] + 2 * f[2] + f[3])
            rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = a + (i + 1) * h
            count += 1
            if not np.isfinite(rho).all() or abs(np.trace(rho)) > 10:
                raise StepTooLargeError(f"fixed-step integration diverged at t={t:.6e} (dt={h:.3e})")
            if count % every == 0 or (i == n - 1 and b == t_end):
                times.append(t)
                for k, O in observables.items():
                    obs_out[k].append(np.trace(O @ rho).real)
                for k in acc:
                    acc_out[k].append(acc[k])
    return Trajectory(
        times=np.array(times),
        observables={k: np.array(v) for k, v in obs_out.items()},
        accumulators={k: np.array(v) for k, v in acc_out.items()},
        final_state=rho,
        steps=count,
    )


def scipy_reference(model, rho0, t_end, accumulators=None, rtol=1e-12, atol=1e-14):
    """Final state and running integrals from scipy's DOP853 on the matrix-form equation.

    Operators are kept sparse in matrix form, so this stays affordable for
    the 256-dimensional three-molecule space. Only piecewise-constant
    Hamiltonians are supported; segments are integrated one at a time.
    """
    accumulators = dict(accumulators or {})
    d = model.dim
    jumps = []
    damping = sp.csr_matrix((d, d), dtype=complex)
    for c in model.collapses:
        b = sp.csr_matrix(c.op)
        jumps.append((b, b.conj().tocsr()))
        damping = damping + (b.conj().T @ b)
    acc_ops = [sp.csr_matrix(A) for A in accumulators.values()]
    y = np.concatenate([np.asarray(rho0, dtype=complex).ravel(), np.zeros(len(acc_ops), complex)])
    edges = [0.0] + [b for b in model.breakpoints if 0 < b < t_end] + [t_end]
    for a, b in zip(edges[:-1], edges[1:]):
        # -i (K rho - rho K^dag) + sum b rho b^dag with K = H - i/2 sum b^dag b
        K = (sp.csr_matrix(model.hamiltonian(0.5 * (a + b))) - 0.5j * damping).tocsr()
        Kc = K.conj().tocsr()

        def f(t, y, K=K, Kc=Kc):
            rho = y[: d * d].reshape(d, d)
            out = -1j * (K @ rho - (Kc @ rho.T).T)
            for op, opc in jumps:
                out = out + op @ (opc @ rho.T).T
            extra = [(A.multiply(rho.T)).sum() for A in acc_ops]
            return np.concatenate([np.asarray(out).ravel(), np.array(extra, dtype=complex)])

        sol = scipy.integrate.solve_ivp(f, (a, b), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise StepTooLargeError(f"reference integration failed: {sol.message}")
        y = sol.y[:, -1]
    rho = y[: d * d].reshape(d, d)
    return rho, {k: float(v.real) for k, v in zip(accumulators, y[d * d:])}


# --- weak drive ------------------------------------------------------------------


def fit_decay_rate(times, populations, upper=0.5, lower=None):
    """Least-squares slope of -log(p) over samples with lower < p < upper."""
    p = np.asarray(populations)
    t = np.asarray(times)
    lower = single_pair.TRANSFER_THRESHOLD * 2 if lower is None else lower
    mask = (p < upper) & (p > lower)
    if mask.sum() < 3:
        raise ValueError("fewer than three samples inside the fit window")
    slope, _ = np.polyfit(t[mask], np.log(p[mask]), 1)
    return -slope, float(np.log10(p[mask].max() / p[mask].min()))


def weak_drive_point(params, tolerance=0.02, config=None):
    """Engine-vs-formula checks at one weak-drive parameter point."""
    inputs = {k: getattr(params, k) for k in ("g", "kappa", "gamma_g", "gamma_h", "omega", "delta1", "delta2")}
    C = params.cooperativity
    reports = []

    traj, res = single_pair.run_square_pulse(params, params.omega, config=config)
    eta_ref = analytics.eta_wd(C, params.delta2, params.kappa)
    reports.append(OracleReport.compare("weak-drive efficiency", inputs, res.eta_transferred, eta_ref, tolerance))

    if params.delta1 == 0 and params.delta2 == 0:
        on = traj.times <= traj.meta["t_p"]
        rate, _ = fit_decay_rate(traj.times[on], traj.observables["p_i0"][on])
        reports.append(OracleReport.compare(
            "weak-drive transfer rate", inputs, rate, analytics.rate_wd(params.omega, params.gamma, C), tolerance))

    R = analytics.rate_wd(params.omega, params.gamma, C)
    model = single_pair.build_five_level(params)
    ratios = []
    for zeta in (R / 10, R / 100):
        rho = lindblad.quasi_steady_state(model, zeta, ("g,0", "h,0"), "i,0")
        ratios.append(rho)
    rho = ratios[0]
    D = analytics.dark_state(params)
    pops = np.abs(D) ** 2
    for idx, name in ((single_pair.E0, "e,0"), (single_pair.G1, "g,1")):
        engine = rho[idx, idx].real / rho[single_pair.I0, single_pair.I0].real
        reports.append(OracleReport.compare(
            f"dark-state population {name}", inputs, engine, pops[idx] / pops[0], tolerance))
    r_e = [x[single_pair.E0, single_pair.E0].real / x[single_pair.G1, single_pair.G1].real for x in ratios]
    reports.append(OracleReport.compare("repump independence", inputs, r_e[1], r_e[0], 1e-4))
    return reports


def weak_drive_suite(params_grid, tolerance=0.02, config=None):
    reports = []
    for p in params_grid:
        if p.omega > p.kappa / 50:
            raise ValueError("weak-drive suite requires omega <= kappa / 50")
        reports.extend(weak_drive_point(p, tolerance, config))
    return reports


def delta_pulse_reports(params_list, tolerance=1e-6):
    reports = []
    for p in params_list:
        _, res = single_pair.run_delta_pulse(p)
        inputs = {"g": p.g, "kappa": p.kappa, "gamma": p.gamma}
        reports.append(OracleReport.compare(
            "delta-pulse efficiency", inputs, res.eta_cavity, delta_pulse_exact(p.g, p.kappa, p.gamma), tolerance))
    return reports
