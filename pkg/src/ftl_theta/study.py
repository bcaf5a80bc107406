"""Refinement studies and plot-data emission."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .entropy_oracle import (
    ExactStepSolution,
    bump_catalog,
    entropy_residual,
    godunov_reference,
    l1_step_vs_profile,
    riemann_profile,
    riemann_solution,
)
from .flux_model import VelocityModel
from .initial_data import StepDensity, total_mass
from .particle_scheme import SchemeConfig, Trajectory, check_cfl, run
from .reconstruction import DiscreteDensity, l1_distance, slice_tv, write_density_csv


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Oracle:
    """Reference for L1 errors: ``exact`` step solution, one ``riemann`` fan, or ``godunov``."""

    kind: str = "exact"
    rho_l: float = 0.0
    rho_r: float = 0.0
    x0: float = 0.0
    window: tuple[float, float] | None = None
    cells: int = 20_000

    def reference(self, model: VelocityModel, d: StepDensity, t: float):
        """A callable ``slice -> L1 error`` for time ``t``."""
        if self.kind == "exact":
            profile = ExactStepSolution(model, d).profile(t)
            return lambda s: l1_step_vs_profile(s, profile)
        if self.kind == "riemann":
            sol = riemann_solution(model, self.rho_l, self.rho_r)
            window = self.window or default_window(sol, self.x0, t)
            profile = riemann_profile(sol, self.x0, t, window)
            return lambda s: l1_step_vs_profile(s, profile, window)
        if self.kind == "godunov":
            ref = godunov_reference(model, d, t, self.cells)
            return lambda s: l1_distance(s, ref)
        raise PlanError(f"unknown oracle {self.kind!r}")

    def sampler(self, model: VelocityModel, d: StepDensity):
        """``(x, t) -> values`` for overlay files."""
        if self.kind == "exact":
            exact = ExactStepSolution(model, d)
            return lambda x, t: exact.profile(t)(x)
        if self.kind == "riemann":
            sol = riemann_solution(model, self.rho_l, self.rho_r)
            return lambda x, t: sol((np.asarray(x) - self.x0) / t) if t > 0 else \
                np.where(np.asarray(x) < self.x0, self.rho_l, self.rho_r)
        if self.kind == "godunov":
            return lambda x, t: godunov_reference(model, d, t, self.cells)(x)
        raise PlanError(f"unknown oracle {self.kind!r}")


def default_window(sol, x0: float, t: float, pad: float = 0.25) -> tuple[float, float]:
    lo, hi = sol.speed_range
    return x0 + lo * t - pad, x0 + hi * t + pad


def parse_oracle(text: str) -> Oracle:
    """``riemann:rl=0.8,rr=0.4,x0=0[,a=..,b=..]``, ``godunov:cells=20000`` or ``exact``."""
    kind, _, rest = text.partition(":")
    kv = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise PlanError(f"expected key=value in oracle descriptor, got {item!r}")
        try:
            kv[key.strip()] = float(val)
        except ValueError:
            raise PlanError(f"non-numeric oracle parameter {item!r}") from None
    kind = kind.strip()
    if kind == "exact":
        return Oracle("exact")
    if kind == "riemann":
        try:
            window = (kv["a"], kv["b"]) if "a" in kv or "b" in kv else None
            return Oracle("riemann", kv["rl"], kv["rr"], kv.get("x0", 0.0), window)
        except KeyError as exc:
            raise PlanError(f"riemann oracle needs {exc.args[0]}") from None
    if kind == "godunov":
        return Oracle("godunov", cells=int(kv.get("cells", 20_000)))
    raise PlanError(f"unknown oracle kind {kind!r}")


def power_schedule(Ns, exponent: float = 1.5, scale: float = 0.1) -> list[tuple[int, int]]:
    """``M = ceil(scale * N**exponent)``; with the defaults N=100 gives M=100."""
    return [(int(N), max(1, math.ceil(scale * N ** exponent - 1e-9))) for N in Ns]


@dataclass
class StudyPlan:
    levels: list[tuple[int, int]]
    theta: float = 0.0
    T: float = 1.0
    compare_time: float | None = None
    oracle: Oracle | None = field(default_factory=Oracle)
    entropy: bool = False
    cfl_margin: float = 1e-6
    solver_tol: float | None = None
    check_invariants: bool = True
    jobs: int = 1

    def configs(self) -> list[SchemeConfig]:
        return [SchemeConfig(self.theta, N, M, self.T, self.cfl_margin, self.solver_tol,
                             check_invariants=self.check_invariants) for N, M in self.levels]

    def validate(self, model: VelocityModel, d: StepDensity) -> None:
        L = total_mass(d)
        problems = []
        for cfg in self.configs():
            report = check_cfl(cfg, model, L)
            if not report.passed:
                problems.append(f"level N={cfg.N}, M={cfg.M}: {report}")
        if self.entropy:
            ratios = [N / M for N, M in self.levels]
            if any(b >= a for a, b in zip(ratios, ratios[1:])):
                problems.append(f"entropy study needs strictly decreasing N/M, got {ratios}")
        if problems:
            raise PlanError("; ".join(problems))


@dataclass
class LevelRow:
    N: int
    M: int
    tau: float
    ell: float
    tau_over_ell: float
    l1_error: float
    max_tv_drift: float
    max_principle_margin: float
    min_entropy_residual: float
    wall_time: float


COLUMNS = ["N", "M", "tau", "ell", "tau_over_ell", "l1_error", "max_tv_drift",
           "max_principle_margin", "min_entropy_residual", "wall_time"]


def _level(cfg: SchemeConfig, plan: StudyPlan, d: StepDensity, model: VelocityModel, error_of,
           bumps) -> LevelRow:
    start = time.perf_counter()
    traj = run(d, cfg, model)
    D = DiscreteDensity(traj)
    tvs = np.array([slice_tv(D, m) for m in range(traj.M + 1)])
    drift = float(np.max(np.diff(tvs))) if traj.M else 0.0
    margin = float(np.min(model.R - traj.densities()))
    t_cmp = plan.compare_time if plan.compare_time is not None else 0.5 * plan.T
    err = error_of(D.slice_at(t_cmp)) if error_of is not None else math.nan
    ent = math.nan
    if bumps:
        ks = np.linspace(0.0, model.R, 11)
        ent = float(min(np.min(entropy_residual(D, model, ks, b)) for b in bumps))
    return LevelRow(cfg.N, cfg.M, traj.tau, traj.ell, traj.tau / traj.ell, err, drift, margin, ent,
                    time.perf_counter() - start)


def study_bumps(model: VelocityModel, d: StepDensity, T: float):
    """Catalog centred on the first interior jump of ``d`` (or its centre when there is none)."""
    vals = d.values
    jumps = np.flatnonzero(vals[1:] != vals[:-1])
    if jumps.size:
        j = int(jumps[0]) + 1
        sol = riemann_solution(model, vals[j - 1], vals[j])
        lo, hi = sol.speed_range
        return bump_catalog(float(d.breakpoints[j]), lo, hi, T)
    lo, hi = d.support()
    return bump_catalog(0.5 * (lo + hi), model.flux_prime(vals[0]), model.flux_prime(vals[0]), T)


def run_study(plan: StudyPlan, d: StepDensity, model: VelocityModel) -> list[LevelRow]:
    """Run every level (CFL checked for all levels first) and return rows in plan order."""
    if not plan.levels:
        return []
    plan.validate(model, d)
    t_cmp = plan.compare_time if plan.compare_time is not None else 0.5 * plan.T
    error_of = plan.oracle.reference(model, d, t_cmp) if plan.oracle is not None else None
    bumps = study_bumps(model, d, plan.T) if plan.entropy else None
    configs = plan.configs()
    if plan.jobs > 1:
        with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
            futures = [pool.submit(_level, c, plan, d, model, error_of, bumps) for c in configs]
            return [f.result() for f in futures]
    return [_level(c, plan, d, model, error_of, bumps) for c in configs]


def write_study_csv(rows: list[LevelRow], path, header: dict | None = None, timing: bool = True) -> None:
    cols = COLUMNS if timing else COLUMNS[:-1]
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    lines.append(",".join(cols))
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in cols))
    text = "\n".join(lines) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _time_tag(t: float) -> str:
    return f"{t:.6g}".replace("-", "m")


def emit_plotdata(traj: Trajectory, times, path, oracle: Oracle | None = None,
                  samples: int = 2001) -> list[Path]:
    """One ``x_left,x_right,value`` file per time, plus ``x,value`` oracle overlays."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    D = DiscreteDensity(traj)
    sampler = oracle.sampler(traj.model, traj.initial) if oracle is not None else None
    written = []
    for t in times:
        t = float(t)
        if not 0.0 <= t <= traj.T * (1 + 1e-12):
            raise ValueError(f"snapshot time {t} outside [0, {traj.T}]")
        f = out / f"density_t{_time_tag(t)}.csv"
        write_density_csv(D.slice_at(t), f)
        written.append(f)
        if sampler is not None:
            pos = traj.positions
            lo, hi = float(pos[:, 0].min()), float(pos[:, -1].max())
            pad = 0.05 * (hi - lo)
            x = np.linspace(lo - pad, hi + pad, samples)
            y = np.asarray(sampler(x, t), dtype=float)
            g = out / f"oracle_t{_time_tag(t)}.csv"
            with open(g, "w") as fh:
                fh.write("x,value\n")
                for xi, yi in zip(x, y):
                    fh.write(f"{float(xi)!r},{float(yi)!r}\n")
            written.append(g)
    return written
