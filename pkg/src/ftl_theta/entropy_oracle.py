"""Reference solutions and weak/entropy residuals.

* exact Riemann solutions from the convex (or concave) envelope of the flux,
  in closed form for affine velocities;
* the exact solution of step data as long as the Riemann fans emitted at the
  breakpoints have not met;
* a first-order Godunov finite-volume reference;
* numerical weak and Kruzhkov residuals against a catalog of smooth bumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .flux_model import VelocityModel
from .initial_data import StepDensity, cdf, total_mass
from .particle_scheme import Trajectory
from .reconstruction import DiscreteDensity, _abs_linear_integral

ENVELOPE_NODES = 4097
PROFILE_CELLS = 100_000

_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


class OracleError(ValueError):
    pass


class InteractionError(OracleError):
    """Raised when fans emitted at different breakpoints have already met."""


# -- Riemann problem --------------------------------------------------------


@dataclass(frozen=True)
class Shock:
    speed: float
    left: float
    right: float

    @property
    def lo(self) -> float:
        return self.speed

    @property
    def hi(self) -> float:
        return self.speed


@dataclass(frozen=True, eq=False)
class Rarefaction:
    lo: float  # slowest speed, carries `left`
    hi: float
    left: float
    right: float
    profile: object  # xi -> rho on [lo, hi], vectorized
    linear: bool = False  # profile affine in xi


@dataclass(frozen=True, eq=False)
class RiemannSolution:
    rho_l: float
    rho_r: float
    waves: tuple

    @property
    def speed_range(self) -> tuple[float, float]:
        if not self.waves:
            return 0.0, 0.0
        return self.waves[0].lo, self.waves[-1].hi

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.full(xi.shape, self.rho_r)
        done = np.zeros(xi.shape, dtype=bool)
        for w in self.waves:
            before = ~done & (xi < w.lo)
            out[before] = w.left
            done |= before
            if isinstance(w, Rarefaction):
                inside = ~done & (xi <= w.hi)
                if np.any(inside):
                    out[inside] = w.profile(xi[inside])
                done |= inside
        return float(out) if out.ndim == 0 else out

    def is_shock(self) -> bool:
        return len(self.waves) == 1 and isinstance(self.waves[0], Shock)


def _check_state(model: VelocityModel, rho: float) -> float:
    rho = float(rho)
    if not 0.0 <= rho <= model.R:
        raise OracleError(f"state {rho} outside [0, {model.R}]")
    return rho


def _affine_riemann(model: VelocityModel, rl: float, rr: float) -> RiemannSolution:
    a, b = model.affine_coeffs
    if rl == rr:
        return RiemannSolution(rl, rr, ())
    if rl < rr:
        return RiemannSolution(rl, rr, (Shock(a - b * (rl + rr), rl, rr),))
    fan = Rarefaction(a - 2 * b * rl, a - 2 * b * rr, rl, rr,
                      profile=lambda xi: (a - np.asarray(xi)) / (2 * b), linear=True)
    return RiemannSolution(rl, rr, (fan,))


def _invert_flux_speed(model: VelocityModel, r0: float, r1: float):
    """Vectorized inverse of ``f'`` on a stretch where it is monotone."""
    s0, s1 = model.flux_prime(r0), model.flux_prime(r1)

    def profile(xi):
        xi = np.asarray(xi, dtype=float)
        lo = np.full(xi.shape, r0)
        hi = np.full(xi.shape, r1)
        # keep lo on the side of s0 so that sign conventions do not matter
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            fm = model.flux_prime(mid)
            towards_r1 = (fm - xi) * (s1 - s0) < 0
            lo = np.where(towards_r1, mid, lo)
            hi = np.where(towards_r1, hi, mid)
        return 0.5 * (lo + hi)

    return profile


def _envelope_riemann(model: VelocityModel, rl: float, rr: float, nodes: int) -> RiemannSolution:
    if rl == rr:
        return RiemannSolution(rl, rr, ())
    rho = np.linspace(rl, rr, nodes)
    f = model.v(rho) * rho
    # walking from rl to rr, the admissible envelope has increasing chord slopes:
    # lower convex hull when rl < rr, upper concave hull when rl > rr
    hull = [0]
    for j in range(1, nodes):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            s_ab = (f[b] - f[a]) / (rho[b] - rho[a])
            s_bj = (f[j] - f[b]) / (rho[j] - rho[b])
            if s_ab >= s_bj:
                hull.pop()
            else:
                break
        hull.append(j)
    waves = []
    k = 0
    while k < len(hull) - 1:
        a, b = hull[k], hull[k + 1]
        if b - a > 1:
            speed = (f[b] - f[a]) / (rho[b] - rho[a])
            waves.append(Shock(float(speed), float(rho[a]), float(rho[b])))
            k += 1
            continue
        start = k
        while k < len(hull) - 1 and hull[k + 1] - hull[k] == 1:
            k += 1
        r0, r1 = float(rho[hull[start]]), float(rho[hull[k]])
        lo, hi = model.flux_prime(r0), model.flux_prime(r1)
        waves.append(Rarefaction(float(lo), float(hi), r0, r1, _invert_flux_speed(model, r0, r1)))
    return RiemannSolution(rl, rr, tuple(waves))


def riemann_solution(model: VelocityModel, rho_l: float, rho_r: float, method: str = "auto",
                     nodes: int = ENVELOPE_NODES) -> RiemannSolution:
    """Entropy solution of the Riemann problem as an ordered wave fan.

    ``method='auto'`` uses the closed form for affine velocities and the
    sampled envelope otherwise; ``'envelope'`` forces sampling.
    """
    rl, rr = _check_state(model, rho_l), _check_state(model, rho_r)
    if method == "closed" or (method == "auto" and model.affine_coeffs is not None):
        if model.affine_coeffs is None:
            raise OracleError("closed-form Riemann solution needs an affine velocity")
        return _affine_riemann(model, rl, rr)
    if method not in ("auto", "envelope"):
        raise OracleError(f"unknown Riemann method {method!r}")
    return _envelope_riemann(model, rl, rr, nodes)


def solve_riemann(model: VelocityModel, rho_l: float, rho_r: float, xi):
    """Value of the Riemann entropy solution at ``x/t = xi``."""
    return riemann_solution(model, rho_l, rho_r)(xi)


# -- piecewise-linear profiles ---------------------------------------------


@dataclass(frozen=True, eq=False)
class Profile:
    """Piecewise-linear function of ``x``; zero outside its pieces.

    Piece ``j`` runs from ``xa[j]`` to ``xb[j]`` with end values ``ya[j]``,
    ``yb[j]``.  Pieces are sorted and do not overlap.
    """

    xa: np.ndarray
    xb: np.ndarray
    ya: np.ndarray
    yb: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self.xa, x, side="right") - 1
        jc = np.clip(j, 0, self.xa.size - 1)
        inside = (j >= 0) & (x < self.xb[jc])
        h = self.xb[jc] - self.xa[jc]
        y = self.ya[jc] + (self.yb[jc] - self.ya[jc]) * (x - self.xa[jc]) / h
        out = np.where(inside, y, 0.0)
        return float(out) if out.ndim == 0 else out


class _PieceBuilder:
    def __init__(self, x_start: float, rho_start: float):
        self.x = x_start
        self.rho = rho_start
        self.pieces: list[tuple[float, float, float, float]] = []

    def constant_to(self, x_end: float):
        if x_end > self.x:
            self.pieces.append((self.x, x_end, self.rho, self.rho))
            self.x = x_end

    def linear(self, xs: np.ndarray, ys: np.ndarray):
        for xa, xb, ya, yb in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
            xa = max(xa, self.x)
            if xb > xa:
                self.pieces.append((xa, xb, ya, yb))
                self.x = xb

    def fan(self, sol: RiemannSolution, x0: float, t: float, cells: int):
        for w in sol.waves:
            if isinstance(w, Shock):
                self.constant_to(x0 + w.speed * t)
            else:
                self.constant_to(x0 + w.lo * t)
                n = 1 if w.linear else cells
                xi = np.linspace(w.lo, w.hi, n + 1)
                if t > 0 and w.hi > w.lo:
                    self.linear(x0 + xi * t, np.asarray(w.profile(xi), dtype=float))
                self.x = max(self.x, x0 + w.hi * t)
            self.rho = w.right

    def build(self) -> Profile:
        arr = np.array(self.pieces, dtype=float).reshape(-1, 4)
        return Profile(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy())


def riemann_profile(sol: RiemannSolution, x0: float, t: float, window: tuple[float, float],
                    cells: int = PROFILE_CELLS) -> Profile:
    """The Riemann solution centred at ``x0`` at time ``t``, restricted to ``window``."""
    a, b = window
    builder = _PieceBuilder(a, sol.rho_l)
    builder.fan(sol, x0, t, cells)
    builder.constant_to(b)
    p = builder.build()
    keep = (p.xb > a) & (p.xa < b)
    xa, xb = np.maximum(p.xa[keep], a), np.minimum(p.xb[keep], b)
    # re-evaluate the clipped ends on the original linear pieces
    ya = p.ya[keep] + (p.yb[keep] - p.ya[keep]) * (xa - p.xa[keep]) / (p.xb[keep] - p.xa[keep])
    yb = p.ya[keep] + (p.yb[keep] - p.ya[keep]) * (xb - p.xa[keep]) / (p.xb[keep] - p.xa[keep])
    return Profile(xa, xb, ya, yb)


class ExactStepSolution:
    """Exact entropy solution for step initial data before any two fans meet.

    Every breakpoint (including the outer edges into vacuum) emits its own
    Riemann fan; until neighbouring fans touch, the solution is just their
    juxtaposition with the intermediate constant states.
    """

    def __init__(self, model: VelocityModel, initial: StepDensity, method: str = "auto",
                 cells: int = PROFILE_CELLS):
        initial.check_bounds(model.R)
        self.model = model
        self.initial = initial
        self.cells = cells
        states = np.concatenate([[0.0], initial.values, [0.0]])
        self.fans = []
        for x0, rl, rr in zip(initial.breakpoints, states[:-1], states[1:]):
            if rl != rr:
                self.fans.append((float(x0), riemann_solution(model, rl, rr, method)))
        self.valid_until = math.inf
        for (xa, sa), (xb, sb) in zip(self.fans[:-1], self.fans[1:]):
            closing = sa.speed_range[1] - sb.speed_range[0]
            if closing > 0:
                self.valid_until = min(self.valid_until, (xb - xa) / closing)

    def profile(self, t: float, cells: int | None = None) -> Profile:
        if t < 0:
            raise OracleError("t must be nonnegative")
        if t > self.valid_until * (1 + 1e-12):
            raise InteractionError(
                f"waves interact at t={self.valid_until:.6g}; no closed-form solution at t={t}")
        cells = self.cells if cells is None else cells
        x_first, sol_first = self.fans[0]
        builder = _PieceBuilder(x_first + sol_first.speed_range[0] * t, 0.0)
        for x0, sol in self.fans:
            builder.fan(sol, x0, t, cells)
        return builder.build()

    def __call__(self, x, t: float):
        return self.profile(t)(x)


def l1_step_vs_profile(d: StepDensity, p: Profile, window: tuple[float, float] | None = None) -> float:
    """Exact ``int |d - p|`` (over ``window`` if given) for a step function and a piecewise-linear profile."""
    grid = np.union1d(np.union1d(d.breakpoints, p.xa), p.xb)
    if window is not None:
        a, b = window
        grid = np.union1d(grid[(grid > a) & (grid < b)], [a, b])
    left, right = grid[:-1], grid[1:]
    mid = 0.5 * (left + right)
    c = np.asarray(d(mid))
    j = np.searchsorted(p.xa, mid, side="right") - 1
    jc = np.clip(j, 0, p.xa.size - 1)
    inside = (j >= 0) & (mid < p.xb[jc])
    slope = (p.yb[jc] - p.ya[jc]) / (p.xb[jc] - p.xa[jc])
    y_left = np.where(inside, p.ya[jc] + slope * (left - p.xa[jc]), 0.0)
    y_right = np.where(inside, p.ya[jc] + slope * (right - p.xa[jc]), 0.0)
    return math.fsum(_abs_linear_integral(y_left - c, y_right - c, right - left))


def l1_error_vs_riemann(traj: Trajectory, rho_l: float, rho_r: float, jump_location: float, t: float,
                        window: tuple[float, float], cells: int = PROFILE_CELLS) -> float:
    """L1 distance on ``window`` between the slice at ``t`` and a single Riemann fan."""
    sol = riemann_solution(traj.model, rho_l, rho_r)
    D = DiscreteDensity(traj)
    return l1_step_vs_profile(D.slice_at(t), riemann_profile(sol, jump_location, t, window, cells), window)


def l1_error_vs_exact(traj: Trajectory, t: float, cells: int = PROFILE_CELLS) -> float:
    """Whole-line L1 distance between the slice at ``t`` and the exact solution of the initial steps."""
    exact = ExactStepSolution(traj.model, traj.initial, cells=cells)
    return l1_step_vs_profile(DiscreteDensity(traj).slice_at(t), exact.profile(t))


# -- Godunov reference -----------------------------------------------------


def flux_critical_points(model: VelocityModel, samples: int = 4097) -> np.ndarray:
    """Interior zeros of ``f'`` on ``(0, R)``."""
    if model.affine_coeffs is not None:
        a, b = model.affine_coeffs
        r = a / (2 * b)
        return np.array([r]) if 0.0 < r < model.R else np.empty(0)
    rho = np.linspace(0.0, model.R, samples)
    fp = model.flux_prime(rho)
    roots = []
    for j in np.flatnonzero(np.sign(fp[:-1]) * np.sign(fp[1:]) < 0):
        lo, hi = rho[j], rho[j + 1]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if np.sign(model.flux_prime(mid)) == np.sign(fp[j]):
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    roots.extend(rho[1:-1][fp[1:-1] == 0.0])
    return np.sort(np.array(roots, dtype=float))


def godunov_flux(model: VelocityModel, a, b, critical: np.ndarray | None = None):
    """``min f`` over ``[a, b]`` if ``a <= b``, else ``max f`` over ``[b, a]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    crit = flux_critical_points(model) if critical is None else critical
    fa, fb = model.flux(a), model.flux(b)
    lo_end = np.minimum(fa, fb)
    hi_end = np.maximum(fa, fb)
    lo_out, hi_out = lo_end, hi_end
    for c in crit:
        fc = float(c * model.v(c))
        between = (np.minimum(a, b) < c) & (c < np.maximum(a, b))
        lo_out = np.where(between, np.minimum(lo_out, fc), lo_out)
        hi_out = np.where(between, np.maximum(hi_out, fc), hi_out)
    out = np.where(a <= b, lo_out, hi_out)
    return float(out) if out.ndim == 0 else out


def godunov_reference(model: VelocityModel, d: StepDensity, t: float, cells: int,
                      cfl: float = 0.9) -> StepDensity:
    """First-order Godunov solution at time ``t``.

    The grid covers the support of ``d`` widened by ``t * max|f'|`` on both
    sides, so the vacuum boundary cells stay empty.  Cell values are clipped
    to ``[0, R]`` against roundoff.
    """
    if cells < 100:
        raise OracleError("godunov_reference needs at least 100 cells")
    if not 0.0 < cfl <= 1.0:
        raise OracleError(f"CFL violation: Godunov needs dt*max|f'| <= dx, got cfl={cfl}")
    d.check_bounds(model.R)
    speed = model.max_flux_speed()
    lo, hi = d.support()
    reach = speed * t
    edges = np.linspace(lo - reach - 1e-9 - 0.01 * (hi - lo), hi + reach + 1e-9 + 0.01 * (hi - lo), cells + 1)
    dx = edges[1] - edges[0]
    u = np.diff(cdf(d, edges)) / dx
    crit = flux_critical_points(model)
    if t > 0:
        steps = max(1, math.ceil(t * speed / (cfl * dx)))
        dt = t / steps
        lam = dt / dx
        for _ in range(steps):
            ext = np.concatenate([[0.0], u, [0.0]])
            F = godunov_flux(model, ext[:-1], ext[1:], crit)
            u = np.clip(u - lam * (F[1:] - F[:-1]), 0.0, model.R)
    return StepDensity(edges, u)


# -- weak and entropy residuals --------------------------------------------


@dataclass(frozen=True)
class Bump:
    """``phi = (1 - s^2)^3 (1 - r^2)^3`` with ``s = (x - xc)/wx``, ``r = (t - tc)/wt``."""

    xc: float
    tc: float
    wx: float
    wt: float
    ident: str = ""

    @staticmethod
    def _p(s):
        return np.where(np.abs(s) < 1, (1 - s * s) ** 3, 0.0)

    @staticmethod
    def _dp(s):
        return np.where(np.abs(s) < 1, -6 * s * (1 - s * s) ** 2, 0.0)

    def px(self, x):
        return self._p((np.asarray(x) - self.xc) / self.wx)

    def dpx(self, x):
        return self._dp((np.asarray(x) - self.xc) / self.wx) / self.wx

    def qt(self, t):
        return self._p((np.asarray(t) - self.tc) / self.wt)

    def dqt(self, t):
        return self._dp((np.asarray(t) - self.tc) / self.wt) / self.wt

    @property
    def x_support(self) -> tuple[float, float]:
        return self.xc - self.wx, self.xc + self.wx

    @property
    def t_support(self) -> tuple[float, float]:
        return max(0.0, self.tc - self.wt), self.tc + self.wt


def bump_catalog(x0: float, xi_lo: float, xi_hi: float, T: float, wx: float = 0.3,
                 spacing: float = 0.3) -> list[Bump]:
    """Nine bumps over the fan from ``x0``: three times, three offsets across the fan axis."""
    xi_mid = 0.5 * (xi_lo + xi_hi)
    bumps = []
    for a, frac in enumerate((0.25, 0.5, 0.75)):
        tc = frac * T
        for b, off in enumerate((-1, 0, 1)):
            bumps.append(Bump(x0 + xi_mid * tc + off * spacing, tc, wx, 0.2 * T, ident=f"b{3 * a + b}"))
    return bumps


def _gl_nodes(a: np.ndarray, b: np.ndarray):
    """5-point Gauss-Legendre nodes/weights on each ``[a_j, b_j]``; shapes (n, 5)."""
    half = 0.5 * (b - a)[:, None]
    mid = 0.5 * (b + a)[:, None]
    return mid + half * _GL_X[None, :], half * _GL_W[None, :]


def _cell_integrals(fn, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    nodes, weights = _gl_nodes(a, b)
    return np.sum(fn(nodes) * weights, axis=1)


def _clip(a, b, lo, hi):
    a2, b2 = np.maximum(a, lo), np.minimum(b, hi)
    keep = b2 > a2
    return a2, b2, keep


def _entropy_pair(model: VelocityModel, rho, k):
    """Kruzhkov pair ``(|rho - k|, sgn(rho - k) (f(rho) - f(k)))`` minus its vacuum value.

    At ``rho = 0`` the pair is ``(k, f(k))``.  Its space-time integral over the
    vacuum cancels against the vacuum part of the initial term, so only
    occupied cells need to be visited.
    """
    rho = np.clip(rho, 0.0, model.R)
    fk = k * model.v(k)
    return np.abs(rho - k) - k, np.sign(rho - k) * (rho * model.v(rho) - fk) - fk


def _initial_term(model: VelocityModel, initial: StepDensity, bump: Bump, ks) -> np.ndarray:
    """``int (|rho0 - k| - k) phi(x, 0) dx``; ``ks=None`` gives ``int rho0 phi(x, 0) dx``."""
    q0 = float(bump.qt(0.0))
    if q0 == 0.0:
        return np.zeros(1 if ks is None else len(ks))
    lo, hi = bump.x_support
    a, b, keep = _clip(initial.breakpoints[:-1], initial.breakpoints[1:], lo, hi)
    P = _cell_integrals(bump.px, a[keep], b[keep])
    vals = initial.values[keep]
    if ks is None:
        return np.array([q0 * np.sum(vals * P)])
    return q0 * np.array([np.sum((np.abs(vals - k) - k) * P) for k in ks])


def _residual_discrete(D: DiscreteDensity, model: VelocityModel, bump: Bump, ks) -> np.ndarray:
    """Exact for the bump polynomials: separable cell/slab integrals with GL5 per cell and slab."""
    t_lo, t_hi = bump.t_support
    if t_hi > D.T:
        raise OracleError("bump support must lie inside [0, T)")
    lo, hi = bump.x_support
    ks_arr = None if ks is None else np.asarray(ks, dtype=float)[:, None]
    total = np.zeros(1 if ks is None else len(ks))
    m_first = D.level(t_lo)
    m_last = min(D.level(t_hi), D.M - 1) if D.M else 0
    pos = D.traj.positions
    for m in range(m_first, m_last + 1):
        s0 = max(m * D.tau, t_lo)
        s1 = min((m + 1) * D.tau, t_hi)
        if s1 <= s0:
            continue
        # int_slab q dt by GL5, int_slab q' dt exactly
        Q = float(_cell_integrals(bump.qt, np.array([s0]), np.array([s1]))[0])
        dQ = float(bump.qt(s1) - bump.qt(s0))
        a, b, keep = _clip(pos[m][:-1], pos[m][1:], lo, hi)
        if not np.any(keep):
            continue
        a, b = a[keep], b[keep]
        rho = D.values(m)[keep]
        P = _cell_integrals(bump.px, a, b)
        dP = bump.px(b) - bump.px(a)
        if ks_arr is None:
            eta, q = rho, rho * model.v(rho)
        else:
            eta, q = _entropy_pair(model, rho[None, :], ks_arr)
        total += np.sum(eta * P, axis=-1) * dQ + np.sum(q * dP, axis=-1) * Q
    return total


def _split_at_level(xa, xb, ya, yb, k):
    """Split linear pieces where they cross the value ``k``."""
    cross = (ya - k) * (yb - k) < 0
    if not np.any(cross):
        return xa, xb, ya, yb
    xs = xa[cross] + (k - ya[cross]) * (xb[cross] - xa[cross]) / (yb[cross] - ya[cross])
    xa2 = np.concatenate([xa[~cross], xa[cross], xs])
    xb2 = np.concatenate([xb[~cross], xs, xb[cross]])
    ya2 = np.concatenate([ya[~cross], ya[cross], np.full(xs.size, k)])
    yb2 = np.concatenate([yb[~cross], np.full(xs.size, k), yb[cross]])
    return xa2, xb2, ya2, yb2


def _residual_profile(exact: ExactStepSolution, model: VelocityModel, bump: Bump, ks,
                      slabs: int = 200, cells: int = 256) -> np.ndarray:
    """Composite GL5 in time; GL5 on each linear piece in space, split where ``rho = k``."""
    t_lo, t_hi = bump.t_support
    lo, hi = bump.x_support
    edges = np.linspace(t_lo, t_hi, slabs + 1)
    tn, tw = _gl_nodes(edges[:-1], edges[1:])
    k_list = [None] if ks is None else list(ks)
    total = np.zeros(len(k_list))
    for t, w in zip(tn.ravel(), tw.ravel()):
        p = exact.profile(float(t), cells=cells)
        a, b, keep = _clip(p.xa, p.xb, lo, hi)
        if not np.any(keep):
            continue
        slope = (p.yb - p.ya) / (p.xb - p.xa)
        ya = (p.ya + slope * (a - p.xa))[keep]
        yb = (p.ya + slope * (b - p.xa))[keep]
        a, b = a[keep], b[keep]
        q, dq = float(bump.qt(t)), float(bump.dqt(t))
        for j, k in enumerate(k_list):
            xa, xb, y0, y1 = (a, b, ya, yb) if k is None else _split_at_level(a, b, ya, yb, k)
            nodes, weights = _gl_nodes(xa, xb)
            rho = y0[:, None] + (y1 - y0)[:, None] * (nodes - xa[:, None]) / (xb - xa)[:, None]
            if k is None:
                eta, flx = rho, rho * model.v(rho)
            else:
                eta, flx = _entropy_pair(model, rho, k)
            integrand = eta * bump.px(nodes) * dq + flx * bump.dpx(nodes) * q
            total[j] += w * np.sum(integrand * weights)
    return total


def _dispatch(solution, model, bump, ks):
    if isinstance(solution, Trajectory):
        solution = DiscreteDensity(solution)
    if isinstance(solution, DiscreteDensity):
        initial = solution.traj.initial
        body = _residual_discrete(solution, model, bump, ks)
    elif isinstance(solution, ExactStepSolution):
        initial = solution.initial
        body = _residual_profile(solution, model, bump, ks)
    else:
        raise TypeError(f"cannot evaluate residuals of {type(solution).__name__}")
    return body + _initial_term(model, initial, bump, ks)


def weak_residual(D, model: VelocityModel, bump: Bump) -> float:
    """``int int (rho phi_t + f(rho) phi_x) + int rho0 phi(., 0)``."""
    return float(_dispatch(D, model, bump, None)[0])


def entropy_residual(D, model: VelocityModel, k, bump: Bump):
    """Left side of the Kruzhkov inequality with ``|rho0 - k|`` as initial weight.

    ``k`` may be a scalar or a sequence (then an array is returned).
    """
    scalar = np.ndim(k) == 0
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(ks < 0) or np.any(ks > model.R):
        raise OracleError(f"k must lie in [0, {model.R}]")
    if bump.wx <= 0 or bump.wt <= 0:
        raise OracleError("bump widths must be positive (nonnegative test function)")
    out = _dispatch(D, model, bump, ks)
    return float(out[0]) if scalar else out


class ResidualRow(NamedTuple):
    k: float
    bump_id: str
    residual: float


def entropy_report(D, model: VelocityModel, ks, bumps) -> list[ResidualRow]:
    rows = []
    for bump in bumps:
        vals = entropy_residual(D, model, np.asarray(ks, dtype=float), bump)
        rows.extend(ResidualRow(float(k), bump.ident, float(r)) for k, r in zip(ks, vals))
    return rows


def write_residual_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("k,bump_id,residual\n")
        for r in rows:
            fh.write(f"{r.k!r},{r.bump_id},{r.residual!r}\n")


def mass_of(profile: Profile) -> float:
    """Exact integral of a profile (used to sanity-check the exact solution)."""
    return math.fsum(0.5 * (profile.ya + profile.yb) * (profile.xb - profile.xa))


__all__ = [
    "Bump", "ExactStepSolution", "InteractionError", "OracleError", "Profile", "Rarefaction",
    "RiemannSolution", "Shock", "bump_catalog", "entropy_report", "entropy_residual",
    "flux_critical_points", "godunov_flux", "godunov_reference", "l1_error_vs_exact",
    "l1_error_vs_riemann", "l1_step_vs_profile", "mass_of", "riemann_profile", "riemann_solution",
    "solve_riemann", "total_mass", "weak_residual", "write_residual_csv",
]
