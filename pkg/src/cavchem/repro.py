"""Reproduction cases: run CLI commands on checked-in configs and compare their outputs.

Fixtures live in ``cavchem/fixtures``: ``cases.json`` lists named runs
(a CLI command plus a config file from ``fixtures/configs``) and cases,
each a set of checks against values read from the run outputs. A value
reference has the form ``run/file.json:key.sub``. The expected side is a
number, a ``[lo, hi]`` pair for ``range``, or another value reference.

Each run executes once and is shared between the cases that need it.
"""

from __future__ import annotations

import io
import json
import math
import tempfile
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import StructuralError

OPS = ("rel", "abs", "range", "lt", "gt", "le", "ge")


@dataclass(frozen=True)
class Check:
    name: str
    value: str
    op: str
    expected: object
    tol: float | None = None
    provenance: str = "TRIVIAL"
    note: str = ""


@dataclass(frozen=True)
class ReproCase:
    id: str
    criterion: int
    runs: tuple
    checks: tuple


@dataclass
class CheckResult:
    case: str
    check: Check
    value: float
    expected: object
    passed: bool


@dataclass
class ReproReport:
    results: list = field(default_factory=list)
    run_status: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.results) and all(s == 0 for s in self.run_status.values())

    def case_passed(self, case_id):
        return all(r.passed for r in self.results if r.case == case_id)


def fixture_dir():
    return Path(str(resources.files("cavchem") / "fixtures"))


def load_cases(path=None):
    path = Path(path) if path is not None else fixture_dir() / "cases.json"
    data = json.loads(path.read_text(encoding="utf-8"))
    runs = data["runs"]
    cases = []
    for c in data["cases"]:
        checks = tuple(Check(**k) for k in c["checks"])
        for k in checks:
            if k.op not in OPS:
                raise StructuralError(f"case {c['id']}: unknown op {k.op!r}")
        for r in c["runs"]:
            if r not in runs:
                raise StructuralError(f"case {c['id']}: unknown run {r!r}")
        cases.append(ReproCase(c["id"], int(c["criterion"]), tuple(c["runs"]), checks))
    return runs, cases


def lookup(outputs, ref):
    """Resolve ``run/file:key.sub`` against the output directories."""
    location, _, key = ref.partition(":")
    run, _, fname = location.partition("/")
    obj = json.loads((outputs[run] / fname).read_text(encoding="utf-8"))
    for part in key.split("."):
        obj = obj[part]
    return math.nan if obj is None else float(obj)


def _expected(outputs, exp):
    if isinstance(exp, str):
        return lookup(outputs, exp)
    if isinstance(exp, list):
        return [float(x) for x in exp]
    return float(exp)


def evaluate(check, value, expected):
    if not math.isfinite(value):
        return False
    op = check.op
    if op == "rel":
        return abs(value - expected) <= check.tol * abs(expected)
    if op == "abs":
        return abs(value - expected) <= check.tol
    if op == "range":
        return expected[0] <= value <= expected[1]
    if op == "lt":
        return value < expected
    if op == "gt":
        return value > expected
    if op == "le":
        return value <= expected
    return value >= expected


def run_cases(cases, runs, workdir, config_dir=None, only=None):
    """Execute the runs the selected cases need, then evaluate every check."""
    from . import cli

    config_dir = Path(config_dir) if config_dir is not None else fixture_dir() / "configs"
    selected = [c for c in cases if only is None or c.id in only]
    needed = []
    for c in selected:
        needed += [r for r in c.runs if r not in needed]
    report = ReproReport()
    outputs = {}
    for name in needed:
        spec = runs[name]
        out = Path(workdir) / name
        out.mkdir(parents=True, exist_ok=True)
        sink = io.StringIO()
        report.run_status[name] = cli.main(
            [spec["command"], "--config", str(config_dir / spec["config"]), "--out", str(out)], stream=sink)
        outputs[name] = out
    for c in selected:
        for k in c.checks:
            try:
                value = lookup(outputs, k.value)
                expected = _expected(outputs, k.expected)
                ok = evaluate(k, value, expected)
            except (OSError, KeyError, ValueError, TypeError):
                value, expected, ok = math.nan, k.expected, False
            report.results.append(CheckResult(c.id, k, value, expected, ok))
    return report


def _fmt(x):
    if isinstance(x, list):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, str):
        return x
    return f"{x:.6g}"


def _bound(check):
    if check.op in ("rel", "abs"):
        return f"{check.op} {check.tol:g}"
    return check.op


def markdown(report, cases):
    """Deterministic markdown: no timestamps, fixed number formatting."""
    lines = ["# Reproduction report", ""]
    lines.append(f"Overall: {'PASS' if report.passed else 'FAIL'}")
    lines.append("")
    lines.append("| case | criterion | result |")
    lines.append("|---|---|---|")
    ids = [c.id for c in cases if any(r.case == c.id for r in report.results)]
    by_id = {c.id: c for c in cases}
    for cid in ids:
        lines.append(f"| {cid} | {by_id[cid].criterion} | {'PASS' if report.case_passed(cid) else 'FAIL'} |")
    failed_runs = sorted(k for k, v in report.run_status.items() if v != 0)
    if failed_runs:
        lines += ["", "Runs with nonzero exit: " + ", ".join(failed_runs)]
    for cid in ids:
        lines += ["", f"## {cid}", "", "| check | value | expected | bound | provenance | result |",
                  "|---|---|---|---|---|---|"]
        for r in report.results:
            if r.case != cid:
                continue
            k = r.check
            exp = _fmt(r.expected) + (f" ({k.note})" if k.note else "")
            lines.append(f"| {k.name} | {_fmt(r.value)} | {exp} | {_bound(k)} | {k.provenance} | "
                         f"{'PASS' if r.passed else 'FAIL'} |")
    return "\n".join(lines) + "\n"


def run_all_repro(out=None, stream=None, only=None):
    """Run every case, write ``repro_report.md`` into ``out`` and return an exit status."""
    runs, cases = load_cases()
    with tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        report = run_cases(cases, runs, tmp, only=only)
        elapsed = time.perf_counter() - t0
    text = markdown(report, cases)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "repro_report.md", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if stream is not None:
        for c in cases:
            if only is None or c.id in only:
                print(f"{c.id:<20} {'PASS' if report.case_passed(c.id) else 'FAIL'}", file=stream)
        print(f"{'PASS' if report.passed else 'FAIL'} ({elapsed:.0f} s)", file=stream)
    return 0 if report.passed else 1
