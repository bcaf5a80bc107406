"""Command line front end: ``run``, ``study``, ``oracle`` and ``check``.

Exit codes: 0 all checks pass, 1 numerical check failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .checks import property_sweep
from .entropy_oracle import (
    ExactStepSolution,
    OracleError,
    bump_catalog,
    entropy_report,
    godunov_reference,
    riemann_solution,
    write_residual_csv,
)
from .flux_model import VelocityModelError, parse_velocity
from .initial_data import DensityError, parse_steps, read_steps, total_mass, total_variation
from .particle_scheme import CFLViolation, SchemeConfig, SchemeError, check_cfl, run
from .reconstruction import DiscreteDensity, write_density_csv, write_diagnostics_csv
from .study import (
    PlanError,
    StudyPlan,
    emit_plotdata,
    parse_oracle,
    power_schedule,
    run_study,
    write_study_csv,
)

log = logging.getLogger("ftl_theta")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

BENCHMARK_INITIAL = "steps:-1:0.8,0:0.4,1"


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _ints(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--config", help="plain 'key = value' file; CLI flags take precedence")
    g.add_argument("--velocity", default="affine:a=0.5,b=1", help="e.g. affine:a=0.5,b=1")
    g.add_argument("--max-density", type=float, default=1.0, help="maximal density R")
    g.add_argument("--initial", default=BENCHMARK_INITIAL, help="steps:x0:rho0,x1:rho1,...,x_end")
    g.add_argument("--initial-file", help="file of 'x value' lines, last line the right endpoint")
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--horizon", type=float, default=1.0, help="time horizon T")
    g.add_argument("--cfl-margin", type=float, default=1e-6)
    g.add_argument("--solver-tol", type=float, default=None)
    g.add_argument("--no-checks", action="store_true", help="skip per-step invariant checks")
    g.add_argument("--oracle", default=None, help="exact | riemann:rl=..,rr=..,x0=.. | godunov:cells=..")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftl-theta", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single simulation with CSV export")
    _common(p)
    p.add_argument("--particles", type=int, default=100, help="N")
    p.add_argument("--steps", type=int, default=100, help="M")
    p.add_argument("--snapshots", default="", help="comma-separated snapshot times")
    p.add_argument("--out", default="ftl_out", help="output directory")

    p = sub.add_parser("study", help="refinement study")
    _common(p)
    p.add_argument("--levels", default="100,200,400", help="particle counts N per level")
    p.add_argument("--steps-list", default=None, help="explicit M per level (overrides the schedule)")
    p.add_argument("--schedule-exponent", type=float, default=1.5, help="M = ceil(scale * N^p)")
    p.add_argument("--schedule-scale", type=float, default=0.1)
    p.add_argument("--compare-time", type=float, default=None, help="defaults to T/2")
    p.add_argument("--entropy", action="store_true", help="add the Kruzhkov residual column")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="omit wall_time (byte-reproducible output)")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")

    p = sub.add_parser("oracle", help="evaluate a reference solution")
    _common(p)
    p.add_argument("--time", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--residuals", default=None, help="write k,bump_id,residual for the exact solution")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")

    p = sub.add_parser("check", help="randomized property suites")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _read_config(path: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        out[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, val in values.items():
            if key not in known or key == "config":
                raise ConfigError(f"unknown config key {key!r}")
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(val) if action.type else val
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _problem(args):
    model = parse_velocity(args.velocity, R=args.max_density)
    d = read_steps(args.initial_file) if args.initial_file else parse_steps(args.initial)
    d.check_bounds(model.R)
    return model, d


def _header(args, model, d) -> dict:
    # output locations are left out so identical runs yield identical bytes
    head = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "residuals")}
    head["model"] = model.name
    head["L"] = repr(total_mass(d))
    head["TV0"] = repr(total_variation(d))
    head["lip"] = repr(model.lip)
    head["V"] = repr(model.V)
    return head


def cmd_run(args) -> int:
    model, d = _problem(args)
    cfg = SchemeConfig(args.theta, args.particles, args.steps, args.horizon, args.cfl_margin,
                       args.solver_tol, check_invariants=not args.no_checks)
    report = check_cfl(cfg, model, total_mass(d))
    print(report)
    if not report.passed:
        return EXIT_CONFIG
    traj = run(d, cfg, model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text("".join(f"{k} = {v}\n" for k, v in _header(args, model, d).items()))
    traj.to_csv(out / "trajectory.csv")
    write_diagnostics_csv(DiscreteDensity(traj), out / "diagnostics.csv")
    times = _floats(args.snapshots) if args.snapshots else [0.0, args.horizon]
    oracle = parse_oracle(args.oracle) if args.oracle else None
    emit_plotdata(traj, times, out, oracle)
    print(f"wrote {out}/trajectory.csv, diagnostics.csv and {len(times)} snapshot(s)")
    return EXIT_OK


def cmd_study(args) -> int:
    model, d = _problem(args)
    Ns = _ints(args.levels)
    if args.steps_list:
        Ms = _ints(args.steps_list)
        if len(Ms) != len(Ns):
            raise ConfigError("--steps-list must match --levels in length")
        levels = list(zip(Ns, Ms))
    else:
        levels = power_schedule(Ns, args.schedule_exponent, args.schedule_scale)
    plan = StudyPlan(levels, args.theta, args.horizon, args.compare_time,
                     parse_oracle(args.oracle or "exact"), args.entropy, args.cfl_margin,
                     args.solver_tol, not args.no_checks, args.jobs)
    rows = run_study(plan, d, model)
    write_study_csv(rows, args.out, _header(args, model, d), timing=not args.no_timing)
    return EXIT_OK


def cmd_oracle(args) -> int:
    model, d = _problem(args)
    oracle = parse_oracle(args.oracle or "exact")
    t = args.time
    if oracle.kind == "godunov":
        ref = godunov_reference(model, d, t, oracle.cells)
        if args.out == "-":
            print("x_left,x_right,value")
            for a, b, r in zip(ref.breakpoints[:-1], ref.breakpoints[1:], ref.values):
                print(f"{float(a)!r},{float(b)!r},{float(r)!r}")
        else:
            write_density_csv(ref, args.out)
    else:
        lo, hi = d.support()
        reach = model.max_flux_speed() * t
        x = np.linspace(lo - reach, hi + reach, args.samples)
        y = oracle.sampler(model, d)(x, t)
        lines = ["x,value"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y)]
        text = "\n".join(lines) + "\n"
        if args.out == "-":
            print(text, end="")
        else:
            Path(args.out).write_text(text)
    if args.residuals:
        exact = ExactStepSolution(model, d)
        if oracle.kind == "riemann":
            sol = riemann_solution(model, oracle.rho_l, oracle.rho_r)
            lo_s, hi_s = sol.speed_range
            bumps = bump_catalog(oracle.x0, lo_s, hi_s, args.horizon)
        else:
            from .study import study_bumps
            bumps = study_bumps(model, d, args.horizon)
        rows = entropy_report(exact, model, np.linspace(0.0, model.R, 11), bumps)
        write_residual_csv(rows, args.residuals)
        worst = min(r.residual for r in rows)
        print(f"min entropy residual of the exact solution: {worst:.3e}", file=sys.stderr)
        if worst < -1e-8:
            return EXIT_NUMERIC
    return EXIT_OK


def cmd_check(args) -> int:
    report = property_sweep(trials=args.trials, seed=args.seed)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_NUMERIC


COMMANDS = {"run": cmd_run, "study": cmd_study, "oracle": cmd_oracle, "check": cmd_check}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CFLViolation, PlanError, ConfigError, VelocityModelError, DensityError, OracleError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemeError as exc:
        print(f"numerical check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
