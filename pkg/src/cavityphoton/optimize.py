"""Maximizing the simulated success probability, and parameter sweeps.

The objective is P_S from the master solver (repumped photons counted) unless
``solver="amplitudes"`` asks for the repump-free probability.  Objective
values are cached on the exact (rates, pulse) pair because both golden-section
and simplex searches revisit points.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .amplitudes import adiabaticity, evolve_amplitudes
from .errors import (BoundViolation, BracketError, BudgetExhausted, CavityPhotonError,
                     InvalidParameter, SpecError)
from .master import evolve_master, repump_contribution
from .model import DrivePulse, RateSet, StopRule, ToleranceSpec, validate
from .montecarlo import run_trajectories

GOLDEN = (math.sqrt(5) - 1) / 2
BOUND_SLACK = 1e-6
WORKERS_ENV = "CAVITYPHOTON_WORKERS"

RATE_FIELDS = tuple(f.name for f in dataclasses.fields(RateSet))
PULSE_FIELDS = ("omega_max", "duration", "ramp", "center", "width", "delta_u_chirp")
SOLVERS = ("amplitudes", "master", "montecarlo")


@dataclass
class OptimizationOutcome:
    best: dict
    best_ps: float
    n_evals: int
    converged: bool
    trace: list = field(default_factory=list)   # (parameters, P_S) in evaluation order


class Objective:
    """Cached P_S(rates, pulse) for one solver."""

    def __init__(self, solver="master", stop=StopRule(), tol=ToleranceSpec()):
        if solver not in ("amplitudes", "master"):
            raise SpecError(f"optimization objective must be amplitudes or master, not {solver!r}")
        self.solver, self.stop, self.tol = solver, stop, tol
        self.cache = {}

    def __call__(self, rates: RateSet, pulse: DrivePulse) -> float:
        key = (rates, pulse)
        if key not in self.cache:
            if self.solver == "master":
                value = evolve_master(rates, pulse, self.stop, self.tol).ps_total
            else:
                value = evolve_amplitudes(rates, pulse, self.stop, self.tol).ps_norep
            self.cache[key] = value
        return self.cache[key]


def _check_bound(rates, ps, solver):
    ceiling = bounds.ps_upper_norep(rates) if solver == "amplitudes" else bounds.ps_upper(rates)
    if ps > ceiling + BOUND_SLACK:
        raise BoundViolation(f"simulated P_S={ps:.12g} exceeds ceiling {ceiling:.12g}")


# ---------------------------------------------------------------------------
# output coupling

def golden_section_max(f, lo, hi, tol, max_iter=200):
    """Maximize a unimodal ``f`` on [lo, hi] to an interval width of ``tol``.

    Returns (x_best, f_best, n_evals, converged, trace).
    """
    trace = []

    def ev(x):
        v = f(x)
        trace.append((x, v))
        return v

    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = ev(x1), ev(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = ev(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = ev(x2)
        it += 1
    x_best, f_best = (x1, f1) if f1 >= f2 else (x2, f2)
    return x_best, f_best, len(trace), b - a <= tol, trace


def maximize_over_kappa_ex(base: RateSet, pulse: DrivePulse, bracket: tuple[float, float],
                           tol: float = 1e-3, solver="master", stop=StopRule(),
                           tolerance=ToleranceSpec(), objective: Objective | None = None
                           ) -> OptimizationOutcome:
    """Golden-section search for the kappa_ex that maximizes simulated P_S.

    ``base.kappa_ex`` is ignored.  If an end of the bracket beats the interior
    optimum a :class:`BracketError` warning is issued and that end is
    returned with ``converged=False``.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise InvalidParameter("bracket", "need 0 < lo < hi")
    obj = objective or Objective(solver, stop, tolerance)

    def f(k):
        rates = validate(base.replace(kappa_ex=float(k)))
        value = obj(rates, pulse)
        _check_bound(rates, value, obj.solver)
        return value

    x, fx, _, converged, trace = golden_section_max(f, lo, hi, tol)
    f_lo, f_hi = f(lo), f(hi)
    trace += [(lo, f_lo), (hi, f_hi)]
    if max(f_lo, f_hi) > fx:
        warnings.warn(BracketError(f"bracket end beats interior optimum on [{lo}, {hi}]"))
        x, fx = (lo, f_lo) if f_lo >= f_hi else (hi, f_hi)
        converged = False
    return OptimizationOutcome({"kappa_ex": float(x)}, float(fx), len(trace), converged,
                               [({"kappa_ex": float(k)}, float(v)) for k, v in trace])


# ---------------------------------------------------------------------------
# pulse shape

class _Budget(Exception):
    pass


def nelder_mead(f, x0, step, budget, fatol=1e-6, max_iter=10_000,
                alpha=1.0, gamma=2.0, rho=0.5, sigma=0.5):
    """Minimize ``f`` from ``x0`` with an axis-aligned initial simplex.

    ``f`` may raise ``_Budget`` to stop early.  Returns (x, fx, converged).
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    pts = [x0]
    for i in range(n):
        p = x0.copy()
        p[i] += step[i]
        pts.append(p)
    best = [x0, math.inf]

    def ev(x):
        v = f(x)
        if v < best[1]:
            best[0], best[1] = x, v
        return v

    try:
        vals = [ev(p) for p in pts]
        for _ in range(max_iter):
            order = np.argsort(vals, kind="stable")
            pts = [pts[i] for i in order]
            vals = [vals[i] for i in order]
            if vals[-1] - vals[0] < fatol:
                return pts[0], vals[0], True
            centroid = np.mean(pts[:-1], axis=0)
            xr = centroid + alpha * (centroid - pts[-1])
            fr = ev(xr)
            if fr < vals[0]:
                xe = centroid + gamma * (xr - centroid)
                fe = ev(xe)
                pts[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < vals[-2]:
                pts[-1], vals[-1] = xr, fr
                continue
            if fr < vals[-1]:
                xc = centroid + rho * (xr - centroid)
                fc = ev(xc)
                accept = fc <= fr
            else:
                xc = centroid + rho * (pts[-1] - centroid)
                fc = ev(xc)
                accept = fc < vals[-1]
            if accept:
                pts[-1], vals[-1] = xc, fc
                continue
            for i in range(1, n + 1):
                pts[i] = pts[0] + sigma * (pts[i] - pts[0])
                vals[i] = ev(pts[i])
    except _Budget:
        pass
    return best[0], best[1], False


def optimize_pulse(rates: RateSet, pulse: DrivePulse, free: dict, budget: int = 200,
                   seed: int = 0, solver="master", stop=StopRule(), tolerance=ToleranceSpec(),
                   restarts: int = 2, fatol: float = 1e-6) -> OptimizationOutcome:
    """Maximize simulated P_S over the pulse fields named in ``free``.

    ``free`` maps DrivePulse field names to (lo, hi) boxes; 1 to 6 fields.
    Boxes spanning two or more decades are searched on a log scale.  The
    first simplex starts from ``pulse`` (clipped into the box); each restart
    starts from the incumbent with a fresh simplex whose edge directions are
    drawn from ``seed``.
    """
    rates = validate(rates)
    names = list(free)
    if not 1 <= len(names) <= 6:
        raise SpecError("optimize_pulse needs 1 to 6 free parameters")
    for name in names:
        if name not in PULSE_FIELDS:
            raise SpecError(f"{name!r} is not a free pulse parameter")
    lo = np.array([free[n][0] for n in names], dtype=float)
    hi = np.array([free[n][1] for n in names], dtype=float)
    if np.any(hi <= lo):
        raise SpecError("each free box needs lo < hi")
    logs = (lo > 0) & (hi / np.where(lo > 0, lo, 1) >= 100)
    lo_t = np.where(logs, np.log(np.where(logs, lo, 1)), lo)
    hi_t = np.where(logs, np.log(np.where(logs, hi, 1)), hi)

    def to_params(z):
        z = np.clip(z, 0.0, 1.0)
        x = lo_t + z * (hi_t - lo_t)
        x = np.where(logs, np.exp(x), x)
        return {n: float(v) for n, v in zip(names, x)}

    obj = Objective(solver, stop, tolerance)
    trace = []

    def f(z):
        if len(trace) >= budget:
            raise _Budget
        params = to_params(z)
        try:
            candidate = pulse.replace(**params)
            value = obj(rates, candidate)
        except InvalidParameter:
            value = -math.inf
        trace.append((params, float(value)))
        if value > -math.inf:
            _check_bound(rates, value, solver)
        return -value

    start = []
    for n, a, b, is_log in zip(names, lo, hi, logs):
        v = getattr(pulse, n)
        v = 0.5 * (a + b) if v is None else min(max(v, a), b)
        start.append((math.log(v) - math.log(a)) / (math.log(b) - math.log(a)) if is_log
                     else (v - a) / (b - a))
    z = np.array(start)
    rng = np.random.default_rng(seed)
    step = np.where(z > 0.75, -0.25, 0.25)
    converged = False
    best_z, best_f = z, math.inf
    for attempt in range(restarts + 1):
        z_new, f_new, converged = nelder_mead(f, best_z, step, budget, fatol=fatol)
        improved = f_new < best_f - fatol
        if f_new < best_f:
            best_z, best_f = z_new, f_new
        if len(trace) >= budget:
            converged = False
            warnings.warn(BudgetExhausted(f"budget of {budget} evaluations exhausted"))
            break
        if attempt and not improved:
            break
        step = rng.uniform(0.05, 0.2, size=len(names)) * rng.choice([-1.0, 1.0], size=len(names))
        step = np.where(best_z + step > 1, -np.abs(step), step)
        step = np.where(best_z + step < 0, np.abs(step), step)
    return OptimizationOutcome(to_params(best_z), float(-best_f), len(trace), converged, trace)


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    """Cartesian-product sweep; ``vary`` maps field names to grids.

    Names refer to RateSet fields or to pulse fields in PULSE_FIELDS.  The
    last name varies fastest.
    """

    rates: RateSet
    pulse: DrivePulse
    vary: tuple           # ((name, (v0, v1, ...)), ...)
    solver: str = "master"
    stop: StopRule = StopRule()
    tol: ToleranceSpec = ToleranceSpec()
    n_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        vary = tuple((name, tuple(float(v) for v in grid))
                     for name, grid in (self.vary.items() if isinstance(self.vary, dict) else self.vary))
        object.__setattr__(self, "vary", vary)
        if not vary:
            raise SpecError("sweep needs at least one varying parameter")
        if self.solver not in SOLVERS:
            raise SpecError(f"unknown solver {self.solver!r}")
        for name, grid in vary:
            if name not in RATE_FIELDS and name not in PULSE_FIELDS:
                raise SpecError(f"{name!r} is not a RateSet or DrivePulse field")
            if not grid:
                raise SpecError(f"grid for {name!r} is empty")
            d = np.diff(grid)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise SpecError(f"grid for {name!r} is not strictly monotone")


SWEEP_COLUMNS = ("P_S", "stderr", "ps_norep", "P_rep", "ps_upper", "pf_lower", "eta_esc",
                 "eta_in", "C", "C_in", "adiabaticity", "status", "error")


def sweep_points(spec: SweepSpec):
    names = [n for n, _ in spec.vary]
    for values in itertools.product(*(grid for _, grid in spec.vary)):
        yield dict(zip(names, values))


def evaluate_point(spec: SweepSpec, point: dict) -> dict:
    """One sweep row: simulate ``point`` and attach the closed-form bounds."""
    row = dict(point)
    row.update({c: math.nan for c in SWEEP_COLUMNS})
    row["error"] = ""
    try:
        rates = validate(spec.rates.replace(**{k: v for k, v in point.items() if k in RATE_FIELDS}))
        pulse = spec.pulse.replace(**{k: v for k, v in point.items() if k in PULSE_FIELDS})
        report = bounds.bound_report(rates)
        row.update(ps_upper=report.ps_upper, pf_lower=report.pf_lower, eta_esc=report.eta_esc,
                   C=report.C, C_in=report.C_in)
        amp = evolve_amplitudes(rates, pulse, spec.stop, spec.tol)
        row["ps_norep"] = amp.ps_norep
        row["adiabaticity"] = adiabaticity(amp, rates)
        if spec.solver == "amplitudes":
            ps = amp.ps_norep
        elif spec.solver == "master":
            m = evolve_master(rates, pulse, spec.stop, spec.tol)
            ps = m.ps_total
            row["P_rep"] = repump_contribution(m, amp)
        else:
            stats = run_trajectories(rates, pulse, spec.stop, spec.n_samples, spec.seed, spec.tol)
            ps = stats.p_success_hat
            row["stderr"] = stats.stderr
        row["P_S"] = ps
        row["eta_in"] = ps / report.eta_esc if report.eta_esc > 0 else math.nan
        row["status"] = "ok"
    except CavityPhotonError as exc:
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order.

    Solver failures mark the row ``failed`` instead of aborting.
    """
    points = list(sweep_points(spec))
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate_point, itertools.repeat(spec), points))
    return [evaluate_point(spec, p) for p in points]


def sweep_columns(spec: SweepSpec) -> list[str]:
    return [n for n, _ in spec.vary] + list(SWEEP_COLUMNS)


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isinf(v) or math.isnan(v) else f"{v:.17g}"
    return str(v)


def write_csv(rows, columns, fp):
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
