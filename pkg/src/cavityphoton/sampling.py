"""Random parameter draws for compliance scans (``cavityphoton verify``) and tests.

Rates are log-uniform over [0.1, 10] gamma with gamma = 1; pulse families are
chosen uniformly.
"""

from __future__ import annotations

import numpy as np

from .model import PULSE_FAMILIES, DrivePulse, RateSet


def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_rates(rng: np.random.Generator, r_u_max: float = 0.0) -> RateSet:
    r_u = float(rng.uniform(0.0, r_u_max)) if r_u_max > 0 else 0.0
    share = float(rng.uniform(0.3, 1.0))
    r_g = (1.0 - r_u) * share
    return RateSet(
        g=_log_uniform(rng, 0.1, 10.0),
        kappa_in=_log_uniform(rng, 0.1, 10.0),
        kappa_ex=_log_uniform(rng, 0.1, 10.0),
        gamma=1.0,
        r_u=r_u,
        r_g=r_g,
        r_o=1.0 - r_u - r_g,
        delta_e=float(rng.uniform(-2.0, 2.0)),
        delta_u=float(rng.uniform(-0.5, 0.5)),
    )


def random_pulse(rng: np.random.Generator) -> DrivePulse:
    family = PULSE_FAMILIES[int(rng.integers(len(PULSE_FAMILIES)))]
    omega_max = _log_uniform(rng, 0.1, 10.0)
    duration = float(rng.uniform(2.0, 30.0))
    if family == "sin2_ramp":
        return DrivePulse(family, omega_max, duration, ramp=duration * float(rng.uniform(0.2, 1.0)),
                          hold=bool(rng.integers(2)))
    if family == "gaussian":
        return DrivePulse(family, omega_max, duration, width=duration * float(rng.uniform(0.05, 0.3)))
    if family == "piecewise_linear":
        times = np.sort(rng.uniform(0.0, duration, size=3))
        knots = ((0.0, 0.0),) + tuple((float(t), float(v)) for t, v in
                                       zip(times, rng.uniform(0.0, 1.0, size=3))) + ((duration, 0.0),)
        if len({k[0] for k in knots}) < len(knots):
            knots = ((0.0, 0.0), (duration / 2, 1.0), (duration, 0.0))
        return DrivePulse(family, omega_max, duration, knots=knots)
    if family == "constant" and rng.uniform() < 0.3:
        return DrivePulse(family, omega_max, duration, delta_u_chirp=float(rng.uniform(-0.2, 0.2)))
    return DrivePulse(family, omega_max, duration)


def random_case(rng: np.random.Generator, r_u_max: float = 0.0) -> tuple[RateSet, DrivePulse]:
    return random_rates(rng, r_u_max), random_pulse(rng)
