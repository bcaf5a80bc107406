"""Fully discrete theta-method follow-the-leader scheme.

Each step moves the leader explicitly with ``v(0)`` and then sweeps from
right to left: particle ``i`` needs the new position of particle ``i+1``.
For ``theta < 1`` every sweep entry is a scalar monotone root find.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flux_model import VelocityModel
from .initial_data import StepDensity, place_particles, total_mass


EPS = np.finfo(float).eps


class SchemeError(RuntimeError):
    """Base class for failures while advancing the particle system."""


class ImplicitSolveError(SchemeError):
    pass


class InvariantViolation(SchemeError):
    def __init__(self, message: str, m: int | None = None, i: int | None = None, dump: dict | None = None):
        where = "" if m is None else f" at step m={m}" + ("" if i is None else f", particle i={i}")
        super().__init__(message + where)
        self.m = m
        self.i = i
        self.dump = dump or {}


class CFLViolation(SchemeError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ParticleState:
    positions: np.ndarray
    ell: float
    time_index: int = 0

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("need at least two particle positions")
        x.flags.writeable = False
        object.__setattr__(self, "positions", x)

    @property
    def N(self) -> int:
        return self.positions.size - 1

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.positions)

    @property
    def densities(self) -> np.ndarray:
        """Local densities ``R_i = ell / (x_{i+1} - x_i)`` for ``i < N``."""
        return self.ell / np.diff(self.positions)


@dataclass(frozen=True)
class SchemeConfig:
    theta: float
    N: int
    M: int
    T: float
    cfl_margin: float = 1e-6
    # None selects the relative default 1e-13 * max(1, |rhs|)
    solver_tol: float | None = None
    solver_max_iter: int = 200
    check_invariants: bool = True

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be a nonnegative integer, got {self.M}")
        if not self.T > 0:
            raise ValueError(f"time horizon must be positive, got {self.T}")
        if not 0.0 < self.cfl_margin < 1.0:
            raise ValueError(f"cfl_margin must lie in (0, 1), got {self.cfl_margin}")
        if self.solver_tol is not None and not self.solver_tol > 0:
            raise ValueError("solver_tol must be positive")

    @property
    def tau(self) -> float:
        return self.T / self.M if self.M else self.T


@dataclass(frozen=True)
class CFLReport:
    passed: bool
    lhs: float  # theta * tau * lip * R^2
    rhs: float  # (1 - margin) * ell
    min_steps: int

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (f"CFL {verdict}: theta*tau*lip*R^2 = {self.lhs:.6g} vs (1-margin)*ell = {self.rhs:.6g}; "
                f"minimal admissible M = {self.min_steps}")


def _cfl_holds(theta, T, M, lip, R, ell, margin) -> bool:
    return theta * (T / M) * lip * R * R <= (1.0 - margin) * ell


def check_cfl(cfg: SchemeConfig, model: VelocityModel, L: float) -> CFLReport:
    """Check ``theta * tau * lip * R^2 <= (1 - margin) * ell`` and find the minimal ``M``."""
    ell = L / cfg.N
    lip, R = model.lip, model.R
    if cfg.theta == 0.0:
        min_steps = 1
    else:
        min_steps = max(1, math.ceil(cfg.theta * cfg.T * lip * R * R / ((1.0 - cfg.cfl_margin) * ell)))
        while not _cfl_holds(cfg.theta, cfg.T, min_steps, lip, R, ell, cfg.cfl_margin):
            min_steps += 1
        while min_steps > 1 and _cfl_holds(cfg.theta, cfg.T, min_steps - 1, lip, R, ell, cfg.cfl_margin):
            min_steps -= 1
    M = max(cfg.M, 1)
    return CFLReport(
        passed=_cfl_holds(cfg.theta, cfg.T, M, lip, R, ell, cfg.cfl_margin),
        lhs=cfg.theta * (cfg.T / M) * lip * R * R,
        rhs=(1.0 - cfg.cfl_margin) * ell,
        min_steps=min_steps,
    )


def rightmost_update(state: ParticleState, tau: float, model: VelocityModel) -> float:
    return float(state.positions[-1] + tau * model.v0)


def _default_tol(rhs: float) -> float:
    return 1e-13 * max(1.0, abs(rhs))


def implicit_gap_solve(rhs, x_right_new, ell, tau, theta, model: VelocityModel,
                       tol: float | None = None, max_iter: int = 200, x0: float | None = None):
    """Solve ``x - (1-theta) tau v_ext(ell / (x_right_new - x)) = rhs`` for ``x``.

    ``g(x)`` (the left side minus ``rhs``) is continuous and nondecreasing with
    slope at least one, where for ``x >= x_right_new`` the density is read as
    ``+inf`` so ``v_ext = v(R)``.  The root therefore lies in
    ``[rhs - c V, rhs + c V]`` with ``c = (1-theta) tau``; a safeguarded
    Newton iteration on that bracket finds it.

    Returns ``(x, residual)``.
    """
    c = (1.0 - theta) * tau
    if c == 0.0:
        return float(rhs), 0.0
    tol = _default_tol(rhs) if tol is None else tol
    v, dv, R = model.v, model.v_prime, model.R
    vR = float(v(R))

    def g_and_slope(x):
        gap = x_right_new - x
        if gap <= 0.0:
            return x - c * vR - rhs, 1.0
        rho = ell / gap
        if rho > R:
            return x - c * vR - rhs, 1.0
        return x - c * float(v(rho)) - rhs, 1.0 - c * float(dv(rho)) * rho * rho / ell

    lo = rhs - c * model.V
    hi = rhs + c * model.V
    g_lo, _ = g_and_slope(lo)
    g_hi, _ = g_and_slope(hi)
    if g_lo > tol or g_hi < -tol:
        raise ImplicitSolveError(f"bracket [{lo!r}, {hi!r}] does not enclose the root (corrupted state?)")
    if abs(g_lo) <= tol:
        return lo, g_lo
    if abs(g_hi) <= tol:
        return hi, g_hi

    x = rhs if x0 is None else min(max(x0, lo), hi)
    gx, slope = g_and_slope(x)
    for _ in range(max_iter):
        if abs(gx) <= tol:
            # one extra Newton step usually lands on the floating-point root
            x_new = x - gx / slope
            if lo <= x_new <= hi:
                g_new, _ = g_and_slope(x_new)
                if abs(g_new) < abs(gx):
                    return x_new, g_new
            return x, gx
        if gx > 0:
            hi = x
        else:
            lo = x
        x_new = x - gx / slope
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
        gx, slope = g_and_slope(x)
    raise ImplicitSolveError(
        f"no root within tol={tol:g} after {max_iter} iterations (last residual {gx:.3g}); "
        "tolerance too tight for the arithmetic precision?"
    )


@dataclass(frozen=True, eq=False)
class StepResult:
    state: ParticleState
    residuals: np.ndarray  # |g| of each implicit solve, zeros for theta = 1
    tolerances: np.ndarray


def _advance(state: ParticleState, cfg: SchemeConfig, model: VelocityModel) -> StepResult:
    x = state.positions
    N = state.N
    ell = state.ell
    tau = cfg.tau
    theta = cfg.theta
    new = np.empty_like(x)
    new[N] = rightmost_update(state, tau, model)
    residuals = np.zeros(N)
    tolerances = np.zeros(N)
    R_old = ell / np.diff(x)
    if theta == 1.0:
        new[:N] = x[:N] + tau * model.v(R_old)
        return StepResult(ParticleState(new, ell, state.time_index + 1), residuals, tolerances)

    rhs = x[:N] + theta * tau * np.asarray(model.v(R_old), dtype=float) if theta else x[:N].copy()
    gaps_old = np.diff(x)
    for i in range(N - 1, -1, -1):
        r = float(rhs[i])
        tol = _default_tol(r) if cfg.solver_tol is None else cfg.solver_tol
        try:
            xi, res = implicit_gap_solve(r, float(new[i + 1]), ell, tau, theta, model,
                                         tol=tol, max_iter=cfg.solver_max_iter,
                                         x0=float(new[i + 1] - gaps_old[i]))
        except ImplicitSolveError as exc:
            raise ImplicitSolveError(f"{exc} (step m={state.time_index}, particle i={i})") from exc
        new[i] = xi
        residuals[i] = abs(res)
        tolerances[i] = tol
    return StepResult(ParticleState(new, ell, state.time_index + 1), residuals, tolerances)


def step(state: ParticleState, cfg: SchemeConfig, model: VelocityModel) -> ParticleState:
    """Advance one time level; checks the max principle and the leader-gap law."""
    result = _advance(state, cfg, model)
    if cfg.check_invariants:
        check_step_invariants(state, result.state, model)
    return result.state


def check_step_invariants(old: ParticleState, new: ParticleState, model: VelocityModel) -> None:
    ell, R = new.ell, model.R
    m = new.time_index
    gaps = new.gaps
    floor = ell / R * (1.0 - 1e-10)
    if np.any(gaps < floor):
        i = int(np.argmin(gaps))
        raise InvariantViolation(
            f"max principle violated: gap {gaps[i]!r} < ell/R = {ell / R!r}", m=m, i=i,
            dump={"old": old.positions.copy(), "new": new.positions.copy()},
        )
    R_lead_old = ell / old.gaps[-1]
    R_lead_new = ell / gaps[-1]
    if R_lead_new > R_lead_old + 1e-12:
        raise InvariantViolation(
            f"leader density increased: {R_lead_old!r} -> {R_lead_new!r}", m=m, i=new.N - 1,
            dump={"old": old.positions.copy(), "new": new.positions.copy()},
        )


def evolution_law_residual(old: ParticleState, new: ParticleState, tau: float, theta: float,
                           model: VelocityModel) -> np.ndarray:
    """Defect of the discrete density update identity for each cell.

    ``R^{m+1} - R^m`` must equal ``-tau R^m R^{m+1} / ell`` times the
    theta-blend of ``v(R_{i+1}) - v(R_i)``, with ``R_N = 0``.
    """
    ell = new.ell
    Ro = np.append(old.densities, 0.0)
    Rn = np.append(new.densities, 0.0)
    vo = np.asarray(model.v(Ro), dtype=float)
    vn = np.asarray(model.v(Rn), dtype=float)
    blend = theta * (vo[1:] - vo[:-1]) + (1.0 - theta) * (vn[1:] - vn[:-1])
    return (Rn[:-1] - Ro[:-1]) + tau * Ro[:-1] * Rn[:-1] / ell * blend


@dataclass(eq=False)
class Trajectory:
    """All time levels of one run, ``positions[m]`` holding ``x^m``."""

    positions: np.ndarray  # shape (M+1, N+1)
    ell: float
    tau: float
    T: float
    theta: float
    model: VelocityModel
    initial: StepDensity
    residuals: np.ndarray = field(default=None)  # shape (M, N)
    tolerances: np.ndarray = field(default=None)

    @property
    def M(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def N(self) -> int:
        return self.positions.shape[1] - 1

    @property
    def L(self) -> float:
        return self.N * self.ell

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.tau

    def state(self, m: int) -> ParticleState:
        return ParticleState(self.positions[m], self.ell, m)

    def densities(self) -> np.ndarray:
        """``R_i^m`` for all levels, shape (M+1, N)."""
        return self.ell / np.diff(self.positions, axis=1)

    def to_csv(self, path) -> None:
        """Rows ``m,t,i,x`` one per particle per level."""
        with open(path, "w") as fh:
            fh.write("m,t,i,x\n")
            for m in range(self.M + 1):
                t = m * self.tau
                for i, xi in enumerate(self.positions[m]):
                    fh.write(f"{m},{t!r},{i},{float(xi)!r}\n")


def evolution_law_bound(traj_scale: float, tol: float, R: float, ell: float) -> float:
    """Admissible defect of the density update identity given solver tolerance ``tol``."""
    return 4.0 * R * R / ell * (2.0 * tol + 16.0 * EPS * traj_scale)


def run(d: StepDensity, cfg: SchemeConfig, model: VelocityModel) -> Trajectory:
    """Place particles for ``d`` and advance ``cfg.M`` steps.

    With ``cfg.check_invariants`` each step verifies the max principle, the
    leader-gap monotonicity, the total-variation decrease and the discrete
    density update identity; failures raise :class:`InvariantViolation`.
    """
    d.check_bounds(model.R)
    L = total_mass(d)
    report = check_cfl(cfg, model, L)
    if not report.passed:
        raise CFLViolation(str(report))
    state = place_particles(d, cfg.N)
    if cfg.check_invariants:
        R0 = state.densities
        if np.any(R0 <= 0) or np.any(R0 > model.R * (1.0 + 1e-12)):
            raise InvariantViolation("initial densities outside (0, R]", m=0)
    N, M = cfg.N, cfg.M
    pos = np.empty((M + 1, N + 1))
    pos[0] = state.positions
    residuals = np.zeros((M, N))
    tolerances = np.zeros((M, N))
    tau = cfg.tau
    tv_prev = _slice_tv(state)
    for m in range(M):
        result = _advance(state, cfg, model)
        new = result.state
        if cfg.check_invariants:
            check_step_invariants(state, new, model)
            tv = _slice_tv(new)
            if tv > tv_prev + 1e-10:
                raise InvariantViolation(f"total variation increased: {tv_prev!r} -> {tv!r}", m=m + 1)
            tv_prev = tv
            defect = evolution_law_residual(state, new, tau, cfg.theta, model)
            scale = float(np.max(np.abs(new.positions))) + tau * model.V
            bound = evolution_law_bound(scale, float(result.tolerances.max(initial=0.0)), model.R, state.ell)
            if np.max(np.abs(defect)) > bound:
                i = int(np.argmax(np.abs(defect)))
                raise InvariantViolation(
                    f"density update identity defect {defect[i]:.3g} exceeds {bound:.3g}", m=m + 1, i=i)
        pos[m + 1] = new.positions
        residuals[m] = result.residuals
        tolerances[m] = result.tolerances
        state = new
    return Trajectory(pos, state.ell, tau, cfg.T, cfg.theta, model, d, residuals, tolerances)


def _slice_tv(state: ParticleState) -> float:
    R = state.densities
    return float(R[0] + np.sum(np.abs(np.diff(R))) + R[-1])


__all__ = [
    "CFLReport", "CFLViolation", "ImplicitSolveError", "InvariantViolation", "ParticleState",
    "SchemeConfig", "SchemeError", "StepResult", "Trajectory", "check_cfl", "evolution_law_residual",
    "implicit_gap_solve", "rightmost_update", "run", "step",
]
