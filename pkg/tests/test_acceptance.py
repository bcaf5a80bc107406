"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from ftl_theta.checks import interpolation_sweep, property_sweep
from ftl_theta.entropy_oracle import (
    ExactStepSolution,
    entropy_report,
    godunov_flux,
    godunov_reference,
    l1_error_vs_riemann,
    l1_step_vs_profile,
)
from ftl_theta.flux_model import affine
from ftl_theta.initial_data import parse_steps
from ftl_theta.particle_scheme import SchemeConfig, check_cfl, implicit_gap_solve, run
from ftl_theta.study import StudyPlan, power_schedule, run_study, study_bumps

RESULTS: dict[int, tuple[bool, str]] = {}

LWR = affine(0.5, 1.0, 1.0)
RAREFACTION = parse_steps("steps:-1:0.8,0:0.4,1")
SHOCK = parse_steps("steps:-1:0.4,0:0.8,1")
LEVELS = power_schedule([100, 200, 400])


def record(n: int, passed: bool, detail: str) -> None:
    RESULTS[n] = (bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'}  criterion {n:2d}: {detail}")
    assert passed, detail


def summary_lines() -> list[str]:
    return [f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {detail}" for n, (ok, detail) in sorted(RESULTS.items())]


@pytest.fixture(scope="module")
def sweep():
    start = time.perf_counter()
    report = property_sweep(trials=100, seed=0, pairs=50, interpolation_pairs=0)
    return report, time.perf_counter() - start


def _sweep_line(sweep, idx: int) -> tuple[bool, str]:
    report, _ = sweep
    r = report.results[idx]
    return r.passed, f"{r.name}: {r.detail} (100 random runs)"


def test_c01_max_principle(sweep):
    ok, detail = _sweep_line(sweep, 0)
    elapsed = sweep[1]
    record(1, ok and elapsed < 30.0, f"{detail}; sweep runtime {elapsed:.1f} s")


def test_c02_tv_monotone(sweep):
    record(2, *_sweep_line(sweep, 1))


def test_c03_mass(sweep):
    record(3, *_sweep_line(sweep, 2))


def test_c04_rightmost_law(sweep):
    record(4, *_sweep_line(sweep, 3))


def test_c05_leader_gap(sweep):
    record(5, *_sweep_line(sweep, 4))


def test_c06_time_continuity(sweep):
    record(6, *_sweep_line(sweep, 5))


def test_c07_interpolation_inequality():
    start = time.perf_counter()
    res = interpolation_sweep(np.random.default_rng(7), 200)
    elapsed = time.perf_counter() - start
    record(7, res.passed and elapsed < 5.0, f"{res.detail}; runtime {elapsed:.2f} s")


def test_c08_implicit_solver():
    # explicit path: compare every step with an element-wise evaluation
    traj = run(RAREFACTION, SchemeConfig(1.0, 100, 100, 1.0), LWR)
    ell, tau = traj.ell, traj.tau
    bitmatch = True
    for m in range(traj.M):
        x = traj.positions[m]
        expect = [x[i] + tau * (0.5 - 1.0 * (ell / (x[i + 1] - x[i]))) for i in range(traj.N)]
        expect.append(x[-1] + tau * 0.5)
        bitmatch &= bool(np.array_equal(traj.positions[m + 1], np.array(expect)))
    # implicit paths: residual against tolerance at every (i, m)
    worst = 0.0
    for theta, d in ((0.0, RAREFACTION), (0.0, SHOCK), (0.5, SHOCK), (0.25, RAREFACTION)):
        for tol in (None, 1e-10):
            tr = run(d, SchemeConfig(theta, 100, 100, 1.0, solver_tol=tol), LWR)
            worst = max(worst, float(np.max(tr.residuals / tr.tolerances)))
    x1, _ = implicit_gap_solve(0.0, 1.0, 0.5, 0.1, 0.0, LWR)
    x2, _ = implicit_gap_solve(0.0, 2.0, 0.5, 0.1, 0.0, LWR)
    root = (2.05 - math.sqrt(2.05 ** 2 - 0.2)) / 2
    quad = abs(x1) <= 1e-12 and abs(x2 - root) <= 1e-12
    record(8, bitmatch and worst <= 1.0 and quad,
           f"theta=1 bit-match {bitmatch}; max residual/tol {worst:.2g}; "
           f"roots {x1:.3g} and {x2!r} vs {root!r}")


@pytest.fixture(scope="module")
def benchmark_levels():
    out = {}
    start = time.perf_counter()
    for name, d in (("rarefaction", RAREFACTION), ("shock", SHOCK)):
        out[name] = run_study(StudyPlan(LEVELS, theta=0.0, T=1.0, compare_time=0.5, entropy=name == "shock"),
                              d, LWR)
    return out, time.perf_counter() - start


def test_c09_riemann_benchmark(benchmark_levels):
    levels, elapsed = benchmark_levels
    ok = elapsed < 60.0
    parts = []
    for name, rows in levels.items():
        errs = [r.l1_error for r in rows]
        ok &= all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] <= 0.05
        parts.append(f"{name} " + "/".join(f"{e:.4f}" for e in errs))
    # the first level is the published setting ell = 0.012, tau = 0.01
    first = levels["rarefaction"][0]
    ok &= math.isclose(first.ell, 0.012, rel_tol=1e-12) and math.isclose(first.tau, 0.01, rel_tol=1e-12)
    # single-fan comparison on a window around the central jump, as a second view
    windowed = []
    for (rl, rr), d in (((0.8, 0.4), RAREFACTION), ((0.4, 0.8), SHOCK)):
        errs = []
        for N, M in LEVELS:
            tr = run(d, SchemeConfig(0.0, N, M, 1.0), LWR)
            errs.append(l1_error_vs_riemann(tr, rl, rr, 0.0, 0.5, (-0.8, 0.1)))
        ok &= all(b < a for a, b in zip(errs, errs[1:]))
        windowed.append("/".join(f"{e:.4f}" for e in errs))
    record(9, ok, f"L1 at t=0.5 for N=100/200/400: {'; '.join(parts)}; "
                  f"windowed fan only {' and '.join(windowed)}; study runtime {elapsed:.1f} s")


def test_c10_entropy_residual(benchmark_levels):
    levels, _ = benchmark_levels
    mins = [r.min_entropy_residual for r in levels["shock"]]
    monotone = all(b >= a for a, b in zip(mins, mins[1:])) and mins[-1] <= 0.0 + 1e-8
    exact = ExactStepSolution(LWR, SHOCK)
    rows = entropy_report(exact, LWR, np.linspace(0.0, 1.0, 11), study_bumps(LWR, SHOCK, 1.0))
    exact_min = min(r.residual for r in rows)
    record(10, monotone and exact_min >= -1e-8 and len(rows) == 99,
           "min residual over 11 k x 9 bumps per level " + ", ".join(f"{m:.3e}" for m in mins)
           + f"; exact solution {exact_min:.2e}")


def test_c11_godunov_cross_check():
    ok = True
    parts = []
    for name, d in (("rarefaction", RAREFACTION), ("shock", SHOCK)):
        profile = ExactStepSolution(LWR, d).profile(0.5)
        errs = [l1_step_vs_profile(godunov_reference(LWR, d, 0.5, n), profile) for n in (200, 400, 800, 1600)]
        ok &= all(b < a for a, b in zip(errs, errs[1:]))
        parts.append(f"{name} " + "/".join(f"{e:.2e}" for e in errs))
    f1, f2 = godunov_flux(LWR, 0.4, 0.8), godunov_flux(LWR, 0.8, 0.4)
    exact_flux = f1 == LWR.flux(0.8) and f2 == LWR.flux(0.4)
    exact_flux &= abs(f1 + 0.24) <= 1e-15 and abs(f2 - 0.04) <= 1e-15
    record(11, ok and exact_flux,
           f"Godunov vs exact over 200..1600 cells: {'; '.join(parts)}; F(0.4,0.8)={f1!r}, F(0.8,0.4)={f2!r}")


def test_c12_cfl_gate():
    L = 1.2
    reject = not check_cfl(SchemeConfig(1.0, 100, 83, 1.0), LWR, L).passed
    accept = check_cfl(SchemeConfig(1.0, 100, 85, 1.0), LWR, L).passed
    implicit = all(check_cfl(SchemeConfig(0.0, 100, M, 1.0), LWR, L).passed for M in (1, 2, 3, 10, 1000))
    minimal = check_cfl(SchemeConfig(1.0, 100, 85, 1.0), LWR, L).min_steps
    record(12, reject and accept and implicit and minimal == 84,
           f"M=83 rejected {reject}, M=85 accepted {accept}, theta=0 accepts all {implicit}, minimal M {minimal}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
