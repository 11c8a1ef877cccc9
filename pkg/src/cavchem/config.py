"""``key = value`` run configuration with linear-MHz frequencies.

Every frequency key ends in ``_mhz`` and is converted to rad/s on the way
in. Absent keys fall back to the Rb2 cavity example parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import analytics
from .errors import CavChemError, InvalidParameterError
from .lindblad import IntegratorConfig


class ConfigError(CavChemError, ValueError):
    """Malformed or out-of-range configuration entry."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _unit_interval(v):
    return 0 <= v <= 1


def _any(v):
    return math.isfinite(v)


def _molecule_count(v):
    return v in (1, 2, 3)


# key -> (parser, check, description of check)
FLOAT, INT, FLOATS, INTS = "float", "int", "floats", "ints"
SCHEMA = {
    "length_um": (FLOAT, _positive, "> 0"),
    "waist_um": (FLOAT, _positive, "> 0"),
    "finesse": (FLOAT, lambda v: v > 1, "> 1"),
    "d_el_cm": (FLOAT, _positive, "> 0"),
    "wavelength_nm": (FLOAT, _positive, "> 0"),
    "g_max_mhz": (FLOAT, _non_negative, ">= 0"),
    "g_mhz": (FLOAT, _non_negative, ">= 0"),
    "cooperativity": (FLOAT, _non_negative, ">= 0"),
    "kappa_mhz": (FLOAT, _positive, "> 0"),
    "gamma_mhz": (FLOAT, _positive, "> 0"),
    "f_fc": (FLOAT, _unit_interval, "in [0, 1]"),
    "omega_mhz": (FLOAT, _non_negative, ">= 0"),
    "omega_over_kappa": (FLOAT, _non_negative, ">= 0"),
    "delta1_mhz": (FLOAT, _any, "finite"),
    "delta2_mhz": (FLOAT, _any, "finite"),
    "t_p_us": (FLOAT, _positive, "> 0"),
    "epsilon": (FLOAT, _positive, "> 0"),
    "n_molecules": (INTS, lambda v: all(_molecule_count(x) for x in v), "each in 1..3"),
    "scan_kappa_mhz": (FLOATS, lambda v: len(v) > 0 and all(x > 0 for x in v), "non-empty, > 0"),
    "scan_f_fc": (FLOATS, lambda v: len(v) > 0 and all(0 < x <= 1 for x in v), "non-empty, in (0, 1]"),
    "rel_tol": (FLOAT, _positive, "> 0"),
    "abs_tol": (FLOAT, _positive, "> 0"),
    "sample_interval_us": (FLOAT, _positive, "> 0"),
    "reference_dt_us": (FLOAT, _positive, "> 0"),
    "validate_random": (INT, _non_negative, ">= 0"),
    "validate_weak": (INT, lambda v: v in (0, 1), "0 or 1"),
    "collective_dual": (INT, lambda v: v in (0, 1), "0 or 1"),
    "out_dir": ("str", lambda v: len(v) > 0, "non-empty"),
}

DEFAULTS = {
    "length_um": 280.0,
    "waist_um": 4.8,
    "finesse": 5e4,
    "d_el_cm": 3e-29,
    "wavelength_nm": 744.0,
    "g_max_mhz": 80.0,
    "kappa_mhz": 5.4,
    "gamma_mhz": 12.0,
    "f_fc": 0.37,
    "delta1_mhz": 0.0,
    "delta2_mhz": 0.0,
    "omega_over_kappa": 0.5,
    "epsilon": 0.1,
    "n_molecules": (1, 2, 3),
    "scan_kappa_mhz": (1.0, 3.0, 10.0, 30.0),
    "scan_f_fc": (0.37, 0.1, 0.05, 0.01),
    "rel_tol": 1e-9,
    "abs_tol": 1e-12,
    "validate_random": 20,
    "validate_weak": 1,
    "collective_dual": 1,
    "out_dir": ".",
}


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def explicit(self, key):
        return key in self.lines

    # derived physical quantities, rad/s internally

    @property
    def geometry(self):
        v = self.values
        return analytics.CavityGeometry(v["length_um"] * 1e-6, v["waist_um"] * 1e-6, v["finesse"])

    @property
    def transition(self):
        v = self.values
        return analytics.TransitionSpec(v["d_el_cm"], v["wavelength_nm"] * 1e-9, analytics.mhz(v["gamma_mhz"]), v["f_fc"])

    def system_params(self, f_fc=None, kappa=None):
        v = self.values
        f = v["f_fc"] if f_fc is None else f_fc
        kappa = analytics.mhz(v["kappa_mhz"]) if kappa is None else kappa
        gamma = analytics.mhz(v["gamma_mhz"])
        if "cooperativity" in v:
            g = math.sqrt(v["cooperativity"] * kappa * gamma)
        elif "g_mhz" in v:
            g = analytics.mhz(v["g_mhz"])
        else:
            g = analytics.mhz(v["g_max_mhz"]) * math.sqrt(f)
        if "omega_mhz" in v:
            omega = analytics.mhz(v["omega_mhz"])
        else:
            omega = v["omega_over_kappa"] * kappa
        return analytics.SystemParams(
            g=g, kappa=kappa, gamma_g=f * gamma, gamma_h=(1 - f) * gamma, omega=omega,
            delta1=analytics.mhz(v["delta1_mhz"]), delta2=analytics.mhz(v["delta2_mhz"]),
        )

    @property
    def t_p(self):
        return self.values["t_p_us"] * 1e-6 if "t_p_us" in self.values else "auto"

    @property
    def integrator(self):
        v = self.values
        dt = v["sample_interval_us"] * 1e-6 if "sample_interval_us" in v else None
        return IntegratorConfig(rel_tol=v["rel_tol"], abs_tol=v["abs_tol"], sample_interval=dt)


def _parse_value(kind, text):
    if kind == FLOAT:
        return float(text)
    if kind == INT:
        return int(text)
    if kind == FLOATS:
        return tuple(float(x) for x in text.split(",") if x.strip())
    if kind == INTS:
        return tuple(int(x) for x in text.split(",") if x.strip())
    return text


def parse_config(text):
    """Parse and validate config text; defaults fill absent keys."""
    values = dict(DEFAULTS)
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        key = key.lower()
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, lineno)
        if key in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key, lineno)
        kind, check, rule = SCHEMA[key]
        try:
            parsed = _parse_value(kind, value)
        except ValueError:
            raise ConfigError(f"cannot parse {value!r} as {kind}", key, lineno) from None
        if not check(parsed):
            raise ConfigError(f"value {value!r} violates precondition {rule}", key, lineno)
        values[key] = parsed
        lines[key] = lineno
    if "omega_mhz" in lines and "omega_over_kappa" in lines:
        raise ConfigError("set either omega_mhz or omega_over_kappa, not both", "omega_mhz", lines["omega_mhz"])
    if "cooperativity" in lines and "g_mhz" in lines:
        raise ConfigError("set either cooperativity or g_mhz, not both", "g_mhz", lines["g_mhz"])
    if "omega_mhz" in lines:
        values.pop("omega_over_kappa", None)
    cfg = RunConfig(values, lines)
    try:
        cfg.geometry, cfg.transition, cfg.system_params(), cfg.integrator
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
