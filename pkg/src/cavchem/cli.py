"""Command-line entry point: ``cavchem <command> [--config FILE] [--out DIR]``.

Exit status is 0 on success, 1 on physics or convergence errors and 2 on
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analytics, collective, optimizer, single_pair, validation
from .analytics import to_mhz
from .config import ConfigError, parse_config
from .errors import CavChemError

SIMULATE_COLUMNS = ("t_us",) + single_pair.COLUMNS + ("eta_cum",)
SCAN_COLUMNS = ("f_fc", "kappa_mhz", "omega_star_mhz", "t_p_star_s", "inefficiency", "status")
COLLECTIVE_COLUMNS = ("t",) + collective.COLUMNS


def fmt(x):
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# --- commands ----------------------------------------------------------------------


def derived_quantities(cfg):
    geom, trans = cfg.geometry, cfg.transition
    V = analytics.mode_volume(geom)
    g_max_eq = analytics.coupling_gmax(trans, V)
    g_max = analytics.mhz(cfg["g_max_mhz"])
    kappa = analytics.mhz(cfg["kappa_mhz"])
    gamma = analytics.mhz(cfg["gamma_mhz"])
    p = cfg.system_params()
    C = p.cooperativity
    eps = cfg["epsilon"]
    k_th = analytics.pi_pulse_kappa_threshold(p.g, p.gamma, eps)
    k_num = analytics.pi_pulse_kappa_threshold_numeric(p.g, p.gamma, eps)
    return {
        "mode_volume_m3": V,
        "g_max_eq_mhz": to_mhz(g_max_eq),
        "g_max_mhz": cfg["g_max_mhz"],
        "g_max_ratio": g_max_eq / g_max if g_max > 0 else math.inf,
        "kappa_finesse_mhz": to_mhz(analytics.kappa_from_finesse(geom)),
        "kappa_mhz": cfg["kappa_mhz"],
        "cooperativity_max": analytics.cooperativity(g_max, kappa, gamma),
        "g_mhz": to_mhz(p.g),
        "cooperativity": C,
        "eta_wd": analytics.eta_wd(C, p.delta2, p.kappa),
        "eta_pi": analytics.eta_pi(p.g, p.kappa, p.gamma),
        "kappa_threshold_mhz": to_mhz(k_th),
        "kappa_threshold_numeric_mhz": to_mhz(k_num),
        "kappa_threshold_rel_dev": abs(k_num - k_th) / k_th,
        "kappa_threshold_asymptote_mhz": to_mhz(p.g / math.sqrt(eps)),
        "asymptote_regime": float(p.g >= 30 * p.gamma * math.sqrt(eps)),
    }


def cmd_params(cfg, out, stream):
    q = derived_quantities(cfg)
    width = max(len(k) for k in q)
    for k, v in q.items():
        print(f"{k:<{width}}  {v:.6g}", file=stream)
    print(
        f"note: evaluated coupling {q['g_max_eq_mhz']:.4g} MHz vs tabulated {q['g_max_mhz']:.4g} MHz "
        f"(ratio {q['g_max_ratio']:.3f}); no polarization or orientation factor applied",
        file=stream,
    )
    if out is not None:
        write_json(out / "params.json", q)
    return 0


def _trajectory_rows(traj):
    cols = [traj.times * 1e6] + [traj.observables[c] for c in single_pair.COLUMNS] + [traj.accumulators["eta_cavity"]]
    return zip(*cols)


def _time_to_fraction(times, series, fraction=0.95):
    k = int(np.argmax(series >= fraction * series[-1]))
    return float(times[k])


def _efficiency_summary(traj, res, p):
    eta = traj.accumulators["eta_cavity"]
    return {
        "eta_cavity": res.eta_cavity,
        "eta_direct": res.eta_direct,
        "eta_lost": res.eta_lost,
        "p_i0_final": res.p_i0_final,
        "residual": res.residual,
        "closure": res.closure,
        "eta_transferred": res.eta_transferred if res.p_i0_final < 1 else None,
        "t95_us": _time_to_fraction(traj.times, eta) * 1e6,
        "t_end_us": float(traj.times[-1]) * 1e6,
        "cooperativity": p.cooperativity,
        "eta_wd": analytics.eta_wd(p.cooperativity, p.delta2, p.kappa),
        "eta_pi": analytics.eta_pi(p.g, p.kappa, p.gamma),
        "max_trace_dev": float(traj.diagnostics["trace_dev"].max()),
        "max_hermiticity_dev": float(traj.diagnostics["hermiticity_dev"].max()),
        "min_eigenvalue": float(traj.diagnostics["min_eigenvalue"].min()),
    }


def cmd_simulate(cfg, out, stream):
    p = cfg.system_params()
    traj, res = single_pair.run_square_pulse(p, p.omega, cfg.t_p, config=cfg.integrator)
    summary = _efficiency_summary(traj, res, p)
    t_p = traj.meta["t_p"]
    pulse_on = traj.times <= t_p
    summary.update(
        t_p_us=t_p * 1e6,
        omega_mhz=to_mhz(p.omega),
        rate_wd_per_s=analytics.rate_wd(p.omega, p.gamma, p.cooperativity),
        samples_pulse_on=int(pulse_on.sum()),
    )
    try:
        rate, decades = validation.fit_decay_rate(traj.times[pulse_on], traj.observables["p_i0"][pulse_on])
    except ValueError:
        rate, decades = math.nan, 0.0
    summary.update(fitted_rate_per_s=rate, fit_decades=decades)
    if cfg.explicit("reference_dt_us"):
        summary.update(_fixed_step_comparison(p, t_p, traj, res, cfg["reference_dt_us"] * 1e-6))
    write_csv(out / "trajectory.csv", SIMULATE_COLUMNS, _trajectory_rows(traj))
    write_json(out / "summary.json", summary)
    print(f"eta = {res.eta_cavity:.6f} (weak-drive limit {summary['eta_wd']:.6f})", file=stream)
    return 0


def _fixed_step_comparison(p, t_p, traj, res, dt):
    model = single_pair.build_five_level(p, single_pair.SquarePulse(p.omega, t_p))
    ref = validation.fixed_step_reference(
        model, np.diag([1.0, 0, 0, 0, 0]).astype(complex), dt, float(traj.times[-1]),
        accumulators=single_pair.accumulators(p), every=10**9,
    )
    pops = np.real(np.diag(ref.final_state))
    engine = np.array([traj.final(c) for c in single_pair.COLUMNS])
    dev = max(abs(ref.final("eta_cavity") - res.eta_cavity), float(np.abs(pops - engine).max()))
    return {"fixed_step_dt_us": dt * 1e6, "fixed_step_eta_cavity": ref.final("eta_cavity"), "fixed_step_max_dev": dev}


def cmd_delta(cfg, out, stream):
    p = cfg.system_params()
    traj, res = single_pair.run_delta_pulse(p, config=cfg.integrator)
    summary = _efficiency_summary(traj, res, p)
    summary["eta_exact"] = validation.delta_pulse_exact(p.g, p.kappa, p.gamma)
    write_csv(out / "trajectory.csv", SIMULATE_COLUMNS, _trajectory_rows(traj))
    write_json(out / "summary.json", summary)
    print(f"eta_pi = {res.eta_cavity:.9f} (closed form {summary['eta_pi']:.9f})", file=stream)
    return 0


def _optimum_dict(opt):
    return {
        "omega_star_mhz": to_mhz(opt.omega_star),
        "t_p_star_s": opt.t_p_star,
        "eta": opt.eta,
        "eta_cavity": opt.eta_cavity,
        "eta_wd_ref": opt.eta_wd_ref,
        "inefficiency": opt.inefficiency,
        "inefficiency_limit": opt.limit,
        "epsilon": opt.epsilon,
        "unbounded": opt.unbounded,
        "fallback": opt.fallback,
        "trials": len(opt.trials),
    }


def cmd_optimize(cfg, out, stream):
    p = cfg.system_params().replace(omega=0.0)
    opt = optimizer.optimize_pulse(p, cfg["epsilon"])
    d = _optimum_dict(opt)
    write_json(out / "optimum.json", d)
    print(
        f"Omega* = 2pi x {d['omega_star_mhz']:.4g} MHz, t_p* = {opt.t_p_star:.4g} s, eta = {opt.eta:.4f}",
        file=stream,
    )
    return 0


def cmd_scan(cfg, out, stream):
    gamma = analytics.mhz(cfg["gamma_mhz"])
    rows = optimizer.scan_kappa(
        cfg["scan_f_fc"], [analytics.mhz(k) for k in cfg["scan_kappa_mhz"]], cfg["epsilon"],
        analytics.mhz(cfg["g_max_mhz"]), gamma,
    )
    write_csv(
        out / "scan.csv", SCAN_COLUMNS,
        ((r.f_fc, to_mhz(r.kappa), to_mhz(r.omega_star), r.t_p_star, r.inefficiency, r.status) for r in rows),
    )
    write_json(out / "scan_summary.json", scan_exponents(rows))
    for r in rows:
        print(f"f_fc={r.f_fc:<6g} kappa={to_mhz(r.kappa):<6g} MHz  Omega*={to_mhz(r.omega_star):.4g} MHz  "
              f"t_p*={r.t_p_star:.4g} s  1-eta={r.inefficiency:.4g}  {r.status}", file=stream)
    return 0


def scan_exponents(rows):
    """Power-law exponents of t_p* against kappa (per f_fc) and f_fc (per kappa) over bounded rows."""
    ok = [r for r in rows if r.status == "ok"]
    out = {"rows": len(rows), "rows_ok": len(ok)}
    ratios = [r.omega_star / r.kappa for r in ok]
    out["omega_over_kappa_min"] = min(ratios) if ratios else math.nan
    out["omega_over_kappa_max"] = max(ratios) if ratios else math.nan

    def slope(xs, ys):
        if len(xs) < 2:
            return math.nan
        return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])

    k_exp = [slope([r.kappa for r in ok if r.f_fc == f], [r.t_p_star for r in ok if r.f_fc == f])
             for f in sorted({r.f_fc for r in ok})]
    f_exp = [slope([r.f_fc for r in ok if r.kappa == k], [r.t_p_star for r in ok if r.kappa == k])
             for k in sorted({r.kappa for r in ok})]
    k_exp = [x for x in k_exp if math.isfinite(x)]
    f_exp = [x for x in f_exp if math.isfinite(x)]
    out["t_p_kappa_exponent"] = float(np.mean(k_exp)) if k_exp else math.nan
    out["t_p_kappa_exponent_spread"] = float(np.ptp(k_exp)) if k_exp else math.nan
    out["t_p_f_fc_exponent"] = float(np.mean(f_exp)) if f_exp else math.nan
    out["t_p_f_fc_exponent_spread"] = float(np.ptp(f_exp)) if f_exp else math.nan
    return out


def cmd_collective(cfg, out, stream):
    p = cfg.system_params().replace(omega=0.0)
    summary = {"eta_pi": analytics.eta_pi(p.g, p.kappa, p.gamma), "cooperativity": p.cooperativity}
    for n in cfg["n_molecules"]:
        traj, obs = collective.run_collective_decay(n, p, config=cfg.integrator)
        rows = zip(traj.times * 1e6, traj.observables["mean_excited"], traj.observables["mean_photon"],
                   traj.observables["cavity_yield_cumulative"])
        write_csv(out / f"collective_n{n}.csv", COLLECTIVE_COLUMNS, rows)
        summary[f"n{n}"] = {
            "cavity_yield_per_molecule": obs.cavity_yield_per_molecule,
            "direct_g_population": obs.direct_g_population,
            "decay_rate_per_s": collective.decay_rate(traj),
            "min_eigenvalue": float(traj.diagnostics["min_eigenvalue"].min()),
            "max_trace_dev": float(traj.diagnostics["trace_dev"].max()),
            "max_hermiticity_dev": float(traj.diagnostics["hermiticity_dev"].max()),
        }
        if cfg["collective_dual"]:
            basis = collective.CollectiveBasis(n)
            _, acc = collective.observable_ops(basis, p)
            _, ref = validation.scipy_reference(
                collective.build_collective(n, p), collective.initial_excited(basis), float(traj.times[-1]), acc)
            dual = ref["cavity_photons"] / n
            summary[f"n{n}"].update(dual_yield_per_molecule=dual,
                                    dual_abs_dev=abs(dual - obs.cavity_yield_per_molecule))
        print(f"N={n}: yield per molecule {obs.cavity_yield_per_molecule:.6f}", file=stream)
    write_json(out / "collective_summary.json", summary)
    return 0


def cmd_validate(cfg, out, stream):
    p = cfg.system_params()
    weak = p.replace(omega=p.kappa / 100) if not cfg.explicit("omega_mhz") and not cfg.explicit("omega_over_kappa") else p
    reports = []
    if cfg["validate_weak"]:
        grid = [weak, weak.replace(delta2=weak.kappa)]
        reports += validation.weak_drive_suite(grid, config=cfg.integrator)
    rng = np.random.default_rng(0)
    randoms = [p]
    for _ in range(max(cfg["validate_random"] - 1, 0)):
        g, k, G = p.gamma * 10 ** rng.uniform(-1, 1, 3)
        randoms.append(analytics.SystemParams(g=g, kappa=k, gamma_g=G * p.f_fc, gamma_h=G * (1 - p.f_fc)))
    reports += validation.delta_pulse_reports(randoms)
    for q in randoms:
        reports.append(validation.OracleReport.compare(
            "eta_pi closed form vs exact", {"g": q.g, "kappa": q.kappa, "gamma": q.gamma},
            analytics.eta_pi(q.g, q.kappa, q.gamma), validation.delta_pulse_exact(q.g, q.kappa, q.gamma), 1e-12))
        reports.append(validation.OracleReport.compare(
            "eta_pi closed form vs Gramian", {"g": q.g, "kappa": q.kappa, "gamma": q.gamma},
            analytics.eta_pi(q.g, q.kappa, q.gamma), validation.delta_pulse_gramian(q.g, q.kappa, q.gamma), 1e-12))
    print(f"{'check':<32} {'inputs':<12} {'engine':>14} {'oracle':>14} {'rel.err':>10} {'tol':>8}  result", file=stream)
    for r in reports:
        print(f"{r.name:<32} {r.inputs:<12} {r.engine:>14.8g} {r.oracle:>14.8g} {r.rel_error:>10.2e} "
              f"{r.tolerance:>8.0e}  {'PASS' if r.passed else 'FAIL'}", file=stream)
    if out is not None:
        write_json(out / "validate.json", [r.__dict__ | {"passed": r.passed} for r in reports])
        groups = {}
        for r in reports:
            g = groups.setdefault(r.name, {"count": 0, "failed": 0, "max_rel_error": 0.0})
            g["count"] += 1
            g["failed"] += int(not r.passed)
            g["max_rel_error"] = max(g["max_rel_error"], r.rel_error)
        write_json(out / "validate_summary.json", {"checks": groups, "failed": sum(not r.passed for r in reports)})
    return 0 if all(r.passed for r in reports) else 1


def cmd_repro(cfg, out, stream):
    from . import repro

    return repro.run_all_repro(out, stream)


COMMANDS = {
    "params": (cmd_params, "derived cavity and efficiency quantities"),
    "simulate": (cmd_simulate, "square-pulse trajectory CSV and efficiency summary"),
    "delta": (cmd_delta, "instantaneous pi-pulse run"),
    "optimize": (cmd_optimize, "fastest pulse within the inefficiency budget"),
    "scan": (cmd_scan, "optimum over the kappa x f_fc grid"),
    "collective": (cmd_collective, "N-molecule collective decay CSVs"),
    "validate": (cmd_validate, "oracle comparison table"),
    "repro": (cmd_repro, "run every reproduction case and write a markdown report"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cavchem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", type=Path, help="key = value configuration file")
        sp.add_argument("--out", type=Path, help="output directory (overrides out_dir)")
    return parser


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else Path(cfg["out_dir"])
    if args.command == "params" and args.out is None and not cfg.explicit("out_dir"):
        out = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    handler = COMMANDS[args.command][0]
    try:
        return handler(cfg, out, stream)
    except CavChemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
