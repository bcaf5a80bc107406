"""Randomized property suite over CFL-compliant runs (used by ``ftl-theta check``)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flux_model import affine
from .initial_data import StepDensity, total_mass
from .particle_scheme import SchemeConfig, check_cfl, run
from .reconstruction import (
    DiscreteDensity,
    interpolation_bound_check,
    slice_mass,
    slice_tv,
    time_continuity_check,
)


def random_step_density(rng: np.random.Generator, R: float, max_pieces: int = 5) -> StepDensity:
    """Random step data in ``[0, R]``, sometimes with vacuum gaps or saturated pieces."""
    while True:
        K = int(rng.integers(1, max_pieces + 1))
        x = np.sort(rng.uniform(-2.0, 2.0, K + 1))
        if np.any(np.diff(x) < 1e-3):
            continue
        vals = rng.uniform(0.0, R, K)
        mask = rng.random(K)
        vals[mask < 0.15] = 0.0
        vals[mask > 0.9] = R
        vals[0] = vals[0] or R * rng.uniform(0.1, 1.0)
        vals[-1] = vals[-1] or R * rng.uniform(0.1, 1.0)
        return StepDensity(x, vals)


def random_case(rng: np.random.Generator):
    R = float(rng.uniform(0.5, 2.0))
    b = float(rng.uniform(0.2, 2.0))
    a = float(rng.uniform(-1.0, 2.0))
    model = affine(a, b, R)
    d = random_step_density(rng, R)
    u = rng.random()
    theta = 0.0 if u < 0.15 else 1.0 if u > 0.85 else float(rng.uniform())
    N = int(rng.integers(4, 41))
    T = float(rng.uniform(0.2, 1.5))
    probe = SchemeConfig(theta, N, 1, T)
    m_min = check_cfl(probe, model, total_mass(d)).min_steps
    M = max(m_min, int(rng.integers(5, 40)))
    return model, d, SchemeConfig(theta, N, M, T)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SweepReport:
    results: list[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [f"{'PASS' if r.passed else 'FAIL'}  {r.name}  {r.detail}" for r in self.results]


def property_sweep(trials: int = 100, seed: int = 0, pairs: int = 50,
                   interpolation_pairs: int = 200) -> SweepReport:
    """Scheme invariants over ``trials`` random runs, then the interpolation inequality."""
    rng = np.random.default_rng(seed)
    worst = {"max_principle": -math.inf, "tv": -math.inf, "mass": 0.0, "leader": -math.inf,
             "rightmost": 0.0, "time": 0.0}
    for _ in range(trials):
        model, d, cfg = random_case(rng)
        traj = run(d, cfg, model)
        D = DiscreteDensity(traj)
        R = traj.densities()
        worst["max_principle"] = max(worst["max_principle"], float(np.max(R / model.R)) - 1.0)
        if np.any(R <= 0):
            worst["max_principle"] = math.inf
        tvs = np.array([slice_tv(D, m) for m in range(traj.M + 1)])
        if traj.M:
            worst["tv"] = max(worst["tv"], float(np.max(np.diff(tvs))))
            worst["leader"] = max(worst["leader"], float(np.max(np.diff(R[:, -1]))))
        L = total_mass(d)
        worst["mass"] = max(worst["mass"], max(abs(slice_mass(D, m) - L) / L for m in range(traj.M + 1)))
        xbar = traj.positions[0, -1]
        expected = xbar + np.arange(traj.M + 1) * traj.tau * model.v0
        scale = 1.0 + abs(xbar) + cfg.T * model.V
        worst["rightmost"] = max(worst["rightmost"], float(np.max(np.abs(traj.positions[:, -1] - expected))) / scale)
        for _ in range(pairs):
            t1, t2 = np.sort(rng.uniform(0.0, cfg.T, 2))
            res = time_continuity_check(D, float(t1), float(t2), model)
            ratio = max(res.d1 / res.d1_bound, res.l1 / res.l1_bound)
            worst["time"] = max(worst["time"], ratio)
    report = SweepReport()
    report.results += [
        SuiteResult("max principle", worst["max_principle"] <= 1e-12, f"max R_i/R - 1 = {worst['max_principle']:.3g}"),
        SuiteResult("TV nonincreasing", worst["tv"] <= 1e-10, f"max TV increase = {worst['tv']:.3g}"),
        SuiteResult("mass conservation", worst["mass"] <= 1e-12, f"max relative defect = {worst['mass']:.3g}"),
        SuiteResult("rightmost particle law", worst["rightmost"] <= 1e-12, f"max scaled deviation = {worst['rightmost']:.3g}"),
        SuiteResult("leader density nonincreasing", worst["leader"] <= 1e-12, f"max increase = {worst['leader']:.3g}"),
        SuiteResult("time continuity bounds", worst["time"] <= 1 + 1e-9, f"max measured/bound = {worst['time']:.3g}"),
    ]
    if interpolation_pairs:
        report.results.append(interpolation_sweep(rng, interpolation_pairs))
    return report


def interpolation_sweep(rng: np.random.Generator, pairs: int = 200) -> SuiteResult:
    worst = 0.0
    for _ in range(pairs):
        A, B = random_equal_mass_pair(rng)
        res = interpolation_bound_check(A, B)
        if not res.passed:
            return SuiteResult("interpolation inequality", False, f"lhs={res.lhs!r} rhs={res.rhs!r}")
        worst = max(worst, res.lhs / res.rhs if res.rhs > 0 else 0.0)
    return SuiteResult("interpolation inequality", True, f"max lhs/rhs = {worst:.3g} over {pairs} pairs")


def random_equal_mass_pair(rng: np.random.Generator) -> tuple[StepDensity, StepDensity]:
    """Two step densities with positive values on their cells and equal mass."""
    def one():
        K = int(rng.integers(1, 8))
        x = np.sort(rng.uniform(-3.0, 3.0, K + 1))
        while np.any(np.diff(x) < 1e-3):
            x = np.sort(rng.uniform(-3.0, 3.0, K + 1))
        return x, rng.uniform(0.05, 2.0, K)

    xa, va = one()
    xb, vb = one()
    A = StepDensity(xa, va)
    B = StepDensity(xb, vb)
    B = StepDensity(xb, vb * (total_mass(A) / total_mass(B)))
    return A, B


__all__ = ["interpolation_sweep", "property_sweep", "random_case", "random_equal_mass_pair", "random_step_density"]
