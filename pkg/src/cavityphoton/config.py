"""Run configuration files.

Grammar (INI-style, ``#`` or ``;`` comments)::

    [rates]        g, kappa_in, kappa_ex, gamma, r_u, r_g, r_o, delta_e, delta_u
    [pulse]        family, omega_max, duration, ramp, center, width, hold,
                   delta_u_chirp, knots = t0:level0, t1:level1, ...
    [stop]         t_max, eps_stop
    [tolerance]    rtol, atol, method
    [run]          solver, n_samples, seed, output
    [sweep]        <field> = v0, v1, ...      (one line per varied field)

Every key is optional except where a subcommand needs it; unknown sections
and keys are rejected.  Rates default to gamma = 1 units.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .errors import SpecError
from .model import DrivePulse, RateSet, StopRule, ToleranceSpec

DEFAULT_RATES = dict(g=1.0, kappa_in=0.1, kappa_ex=1.0, gamma=1.0, r_u=0.0, r_g=1.0, r_o=0.0,
                     delta_e=0.0, delta_u=0.0)
DEFAULT_PULSE = dict(family="sin2_ramp", omega_max=1.0, duration=50.0)

_FLOAT = float


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _knots(text):
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        t, _, v = item.partition(":")
        out.append((float(t), float(v)))
    return tuple(out)


def _optional_float(text):
    return None if str(text).strip().lower() in ("", "none") else float(text)


SCHEMA = {
    "rates": {name: _FLOAT for name in DEFAULT_RATES},
    "pulse": {"family": str, "omega_max": _FLOAT, "duration": _FLOAT, "ramp": _optional_float,
              "center": _optional_float, "width": _optional_float, "hold": _bool,
              "delta_u_chirp": _FLOAT, "knots": _knots},
    "stop": {"t_max": _optional_float, "eps_stop": _FLOAT},
    "tolerance": {"rtol": _FLOAT, "atol": _FLOAT, "method": str},
    "run": {"solver": str, "n_samples": int, "seed": int, "output": str},
}


@dataclass
class RunConfig:
    rates: dict = field(default_factory=lambda: dict(DEFAULT_RATES))
    pulse: dict = field(default_factory=lambda: dict(DEFAULT_PULSE))
    stop: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    run: dict = field(default_factory=lambda: {"solver": "master", "n_samples": 10_000, "seed": 0})
    sweep: list = field(default_factory=list)     # [(name, (values...)), ...]

    def set(self, section: str, key: str, value):
        """Set one value, parsing strings through the schema."""
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise SpecError(f"unknown config key [{section}] {key}")
        if isinstance(value, str):
            try:
                value = SCHEMA[section][key](value)
            except ValueError as exc:
                raise SpecError(f"[{section}] {key}: {exc}") from None
        getattr(self, section)[key] = value

    def rate_set(self) -> RateSet:
        return RateSet(**self.rates)

    def drive_pulse(self) -> DrivePulse:
        return DrivePulse(**self.pulse)

    def stop_rule(self) -> StopRule:
        return StopRule(**self.stop)

    def tolerance_spec(self) -> ToleranceSpec:
        return ToleranceSpec(**self.tolerance)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fp:
            parser.read_file(fp)
    except (OSError, configparser.Error) as exc:
        raise SpecError(f"cannot read config {path}: {exc}".replace("\n", " ")) from None
    cfg = RunConfig()
    for section in parser.sections():
        if section == "sweep":
            for key, raw in parser.items(section):
                if key not in {f.name for f in fields(RateSet)} | {"omega_max", "duration", "ramp",
                                                                  "center", "width", "delta_u_chirp"}:
                    raise SpecError(f"unknown sweep parameter {key!r}")
                try:
                    grid = tuple(float(v) for v in raw.split(",") if v.strip())
                except ValueError as exc:
                    raise SpecError(f"[sweep] {key}: {exc}") from None
                cfg.sweep.append((key, grid))
            continue
        if section not in SCHEMA:
            raise SpecError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            cfg.set(section, key, raw)
    return cfg
