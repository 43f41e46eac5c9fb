"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure
(ToleranceNotMet / NotConverged), 3 bound violation.  Every failure prints one
``error: <Kind>: <reason>`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import bounds
from .amplitudes import adiabaticity, evolve_amplitudes
from .config import RunConfig, load_config
from .errors import (BoundViolation, CavityPhotonError, DomainError, InvalidParameter,
                     NumericalError, SpecError)
from .master import FLUX_NAMES, evolve_master, repump_contribution
from .model import PhysicalCavity, validate
from .montecarlo import run_trajectories
from .optimize import (SweepSpec, format_value, maximize_over_kappa_ex, optimize_pulse, sweep,
                       sweep_columns, write_csv)
from .sampling import random_case

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_BOUND = 0, 1, 2, 3

RATE_FLAGS = ("g", "kappa_in", "kappa_ex", "gamma", "r_u", "r_g", "r_o", "delta_e", "delta_u")
PULSE_FLAGS = {"family": str, "omega_max": float, "duration": float, "ramp": float,
               "center": float, "width": float, "delta_u_chirp": float}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_run_options(p, solver=True):
    p.add_argument("--config", help="INI run configuration")
    for name in RATE_FLAGS:
        p.add_argument(_flag(name), type=float, dest=name)
    for name, typ in PULSE_FLAGS.items():
        p.add_argument(_flag(name), type=typ, dest=name)
    p.add_argument("--hold", action="store_true", default=None,
                   help="keep the final drive amplitude on after the pulse")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--eps-stop", type=float, dest="eps_stop")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    if solver:
        p.add_argument("--solver", choices=("amplitudes", "master", "montecarlo"))
        p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", help="CSV output path")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for name in RATE_FLAGS:
        if getattr(args, name, None) is not None:
            cfg.set("rates", name, getattr(args, name))
    # a lone r_u or r_g override keeps the branching sum at one via r_o / r_g
    r = cfg.rates
    if getattr(args, "r_u", None) is not None or getattr(args, "r_g", None) is not None:
        if getattr(args, "r_o", None) is None:
            if getattr(args, "r_g", None) is None:
                r["r_g"] = max(1.0 - r["r_u"] - r["r_o"], 0.0)
            else:
                r["r_o"] = max(1.0 - r["r_u"] - r["r_g"], 0.0)
    for name in PULSE_FLAGS:
        if getattr(args, name, None) is not None:
            cfg.set("pulse", name, getattr(args, name))
    if getattr(args, "hold", None):
        cfg.set("pulse", "hold", True)
    for name, section in (("t_max", "stop"), ("eps_stop", "stop"), ("rtol", "tolerance"),
                          ("atol", "tolerance")):
        if getattr(args, name, None) is not None:
            cfg.set(section, name, getattr(args, name))
    for name in ("solver", "n_samples", "seed", "output"):
        if getattr(args, name, None) is not None:
            cfg.set("run", name, getattr(args, name))
    return cfg


def _print_pairs(pairs, out):
    width = max(len(k) for k, _ in pairs)
    for key, value in pairs:
        out.write(f"{key:<{width}} = {format_value(value)}\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_bound(args, out):
    if args.c_in is not None:
        r_u = args.r_u or 0.0
        pairs = [("C_in", args.c_in), ("r_u", r_u),
                 ("pf_lower", bounds.pf_lower(args.c_in, r_u)),
                 ("pf_lower_approx", bounds.pf_lower_approx(args.c_in)),
                 ("ps_max", 1.0 - bounds.pf_lower(args.c_in, r_u))]
        if r_u < 1:
            pairs.append(("kappa_ex_opt/kappa_in", bounds.kappa_ex_opt(1.0, args.c_in, r_u)))
        _print_pairs(pairs, out)
        return EXIT_OK
    rates = validate(_config(args).rate_set())
    rep = bounds.bound_report(rates)
    _print_pairs([(k, getattr(rep, k)) for k in rep.__dataclass_fields__], out)
    return EXIT_OK


def cmd_physical(args, out):
    cavity = PhysicalCavity(mu_ge=args.mu, omega_ge=args.omega, L=args.length, A_eff=args.area,
                            alpha_loss=args.alpha_loss, r_u=args.r_u,
                            r_g=args.r_g if args.r_g is not None else 1.0 - args.r_u - args.r_o,
                            r_o=args.r_o)
    phys = bounds.rates_from_physical(cavity)
    pairs = [("g", phys.g), ("kappa_in", phys.kappa_in), ("gamma", phys.gamma),
             ("r_A", phys.r_A), ("C_in", phys.C_in)]
    if cavity.alpha_loss > 0:
        pairs.append(("2C_in/(1-r_u)", bounds.effective_cin(cavity.alpha_loss, phys.r_A,
                                                            cavity.r_g, cavity.r_u)))
        pairs.append(("kappa_ex_opt", bounds.kappa_ex_opt(phys.kappa_in, phys.C_in, cavity.r_u)))
    pairs.append(("pf_lower", bounds.pf_lower(phys.C_in, cavity.r_u)))
    _print_pairs(pairs, out)
    return EXIT_OK


def _series_amplitudes(res, rates):
    cols = ["t", "pop_u0", "pop_e0", "pop_g1", "emission"]
    pops = np.abs(res.alpha) ** 2
    rows = [dict(zip(cols, (float(t), *map(float, p), float(e))))
            for t, p, e in zip(res.t, pops, res.emission_profile)]
    return cols, rows


def _series_master(res):
    s = res.samples
    cols = ["t", "rho_uu", "rho_ee", "rho_gg", "p_g0", "p_o0", *FLUX_NAMES]
    rows = [{c: float(s[c][k]) for c in cols} for k in range(s["t"].size)]
    return cols, rows


def cmd_simulate(args, out):
    cfg = _config(args)
    rates, pulse = validate(cfg.rate_set()), cfg.drive_pulse()
    stop, tol = cfg.stop_rule(), cfg.tolerance_spec()
    solver = cfg.run["solver"]
    summary = [("solver", solver)]
    series = None
    if solver == "montecarlo":
        stats = run_trajectories(rates, pulse, stop, cfg.run["n_samples"], cfg.run["seed"], tol)
        summary += [("P_S", stats.p_success_hat), ("stderr", stats.stderr),
                    ("n_samples", stats.n_samples), ("mean_repumps", stats.mean_repumps)]
        summary += [(f"count_{k}", v) for k, v in stats.outcome_counts.items()]
        series = (["repumps", "trajectories"],
                  [{"repumps": k, "trajectories": v} for k, v in stats.repump_histogram.items()])
    else:
        amp = evolve_amplitudes(rates, pulse, stop, tol)
        if solver == "amplitudes":
            summary += [("P_S", amp.ps_norep)]
            series = _series_amplitudes(amp, rates)
        else:
            m = evolve_master(rates, pulse, stop, tol)
            summary += [("P_S", m.ps_total), ("P_rep", repump_contribution(m, amp))]
            summary += [(k, getattr(m, k)) for k in FLUX_NAMES]
            series = _series_master(m)
        summary += [("ps_norep", amp.ps_norep), ("I_g", amp.I_g), ("I_e", amp.I_e),
                    ("I_g_prime", amp.I_g_prime), ("final_norm", amp.final_norm),
                    ("adiabaticity", adiabaticity(amp, rates)), ("t_end", amp.t_end)]
    report = bounds.bound_report(rates)
    summary += [("ps_upper", report.ps_upper), ("pf_lower", report.pf_lower)]
    _print_pairs(summary, out)
    if cfg.run.get("output"):
        with open(cfg.run["output"], "w", newline="") as fp:
            write_csv(series[1], series[0], fp)
    return EXIT_OK


def _parse_grid(text):
    name, _, values = text.partition("=")
    if not values:
        raise SpecError(f"--vary expects name=v0,v1,..., got {text!r}")
    try:
        return name.strip(), tuple(float(v) for v in values.split(",") if v.strip())
    except ValueError as exc:
        raise SpecError(f"--vary {text!r}: {exc}") from None


def cmd_sweep(args, out):
    cfg = _config(args)
    vary = list(cfg.sweep)
    for text in args.vary or ():
        name, grid = _parse_grid(text)
        vary = [(n, g) for n, g in vary if n != name] + [(name, grid)]
    spec = SweepSpec(cfg.rate_set(), cfg.drive_pulse(), tuple(vary), solver=cfg.run["solver"],
                     stop=cfg.stop_rule(), tol=cfg.tolerance_spec(),
                     n_samples=cfg.run["n_samples"], seed=cfg.run["seed"])
    rows = sweep(spec, workers=args.workers)
    cols = sweep_columns(spec)
    if cfg.run.get("output"):
        with open(cfg.run["output"], "w", newline="") as fp:
            write_csv(rows, cols, fp)
    else:
        write_csv(rows, cols, out)
    failed = sum(r["status"] != "ok" for r in rows)
    return EXIT_NUMERICAL if failed == len(rows) else EXIT_OK


def cmd_optimize(args, out):
    cfg = _config(args)
    pulse = cfg.drive_pulse()
    solver = cfg.run["solver"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.target == "kappa-ex":
            lo, hi = args.bracket
            outcome = maximize_over_kappa_ex(cfg.rate_set(), pulse, (lo, hi), tol=args.tol,
                                             solver=solver, stop=cfg.stop_rule(),
                                             tolerance=cfg.tolerance_spec())
        else:
            free = {}
            for text in args.free or ():
                name, _, box = text.partition("=")
                lo, _, hi = box.partition(":")
                try:
                    free[name.strip()] = (float(lo), float(hi))
                except ValueError:
                    raise SpecError(f"--free expects name=lo:hi, got {text!r}") from None
            if not free:
                raise SpecError("optimize pulse needs at least one --free name=lo:hi")
            outcome = optimize_pulse(cfg.rate_set(), pulse, free, budget=args.budget,
                                     seed=cfg.run["seed"], solver=solver,
                                     stop=cfg.stop_rule(), tolerance=cfg.tolerance_spec())
    for w in caught:
        args.err.write(f"warning: {w.category.__name__}: {w.message}\n")
    pairs = [(k, v) for k, v in outcome.best.items()]
    pairs += [("P_S", outcome.best_ps), ("P_F", 1.0 - outcome.best_ps),
              ("evaluations", outcome.n_evals), ("converged", outcome.converged)]
    _print_pairs(pairs, out)
    if cfg.run.get("output"):
        names = list(outcome.best)
        rows = [dict(params, P_S=v) for params, v in outcome.trace]
        with open(cfg.run["output"], "w", newline="") as fp:
            write_csv(rows, names + ["P_S"], fp)
    return EXIT_OK


def cmd_verify(args, out):
    """Random-draw scan of the analytic ceilings against the master solver."""
    rng = np.random.default_rng(args.seed)
    within = skipped = prep_exceeded = 0
    violations = []
    for k in range(args.draws):
        rates, pulse = random_case(rng, r_u_max=args.r_u_max)
        rates = validate(rates)
        try:
            m = evolve_master(rates, pulse)
            a = evolve_amplitudes(rates, pulse)
        except NumericalError:
            skipped += 1
            continue
        ceiling = bounds.ps_upper(rates)
        ceiling_norep = bounds.ps_upper_norep(rates)
        C, C_in = bounds.cooperativities(rates)
        ok = (m.ps_total <= ceiling + 1e-6
              and a.ps_norep <= ceiling_norep + 1e-7
              and 1.0 - m.ps_total >= bounds.pf_lower(C_in, rates.r_u) - 1e-9)
        if ok:
            within += 1
        else:
            violations.append(k)
        if repump_contribution(m, a) > bounds.prep_upper(rates) + 1e-6:
            prep_exceeded += 1
    checked = args.draws - skipped
    out.write(f"{within}/{checked} within bound\n")
    if skipped:
        out.write(f"{skipped} draws skipped (numerical failure)\n")
    out.write(f"{prep_exceeded}/{checked} exceed the slow-variation repump estimate (informational)\n")
    if violations:
        raise BoundViolation(f"draws {violations} exceed the success-probability ceiling")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavityphoton",
                     description="Cavity-QED single-photon efficiency limits and simulations.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("bound", help="closed-form bound report")
    p.add_argument("--c-in", type=float, dest="c_in", help="internal cooperativity only")
    _add_run_options(p, solver=False)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("physical", help="SI cavity calculator")
    p.add_argument("--mu", type=float, required=True, help="dipole moment [C m]")
    p.add_argument("--omega", type=float, required=True, help="transition angular frequency [rad/s]")
    p.add_argument("--length", type=float, required=True, help="cavity length [m]")
    p.add_argument("--area", type=float, required=True, help="effective mode area [m^2]")
    p.add_argument("--alpha-loss", type=float, required=True, dest="alpha_loss")
    p.add_argument("--r-u", type=float, default=0.0, dest="r_u")
    p.add_argument("--r-g", type=float, default=None, dest="r_g")
    p.add_argument("--r-o", type=float, default=0.0, dest="r_o")
    p.set_defaults(func=cmd_physical)

    p = sub.add_parser("simulate", help="run one solver")
    _add_run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid sweep to CSV")
    _add_run_options(p)
    p.add_argument("--vary", action="append", help="name=v0,v1,... (repeatable)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="maximize P_S over kappa_ex or pulse parameters")
    p.add_argument("target", choices=("kappa-ex", "pulse"))
    _add_run_options(p)
    p.add_argument("--bracket", type=float, nargs=2, default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--free", action="append", help="name=lo:hi (repeatable)")
    p.add_argument("--budget", type=int, default=200)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="random-draw bound compliance scan")
    p.add_argument("--draws", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r-u-max", type=float, default=0.9, dest="r_u_max")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        if args.command == "optimize" and args.target == "kappa-ex" and args.bracket is None:
            raise UsageError("optimize kappa-ex needs --bracket LO HI")
        args.err = err
        return args.func(args, out)
    except UsageError as exc:
        err.write(f"error: usage: {exc}\n")
        return EXIT_USAGE
    except BoundViolation as exc:
        err.write(f"error: BoundViolation: {exc}\n")
        return EXIT_BOUND
    except NumericalError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL
    except (InvalidParameter, DomainError, SpecError, CavityPhotonError, TypeError) as exc:
        err.write(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}\n")
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
