"""Discrete density built from particle states, and exact functionals on it.

Everything here is closed form on piecewise-constant or piecewise-linear
objects: total variation, L1 distances, pseudo-inverse CDFs and the scaled
1-Wasserstein distance.  No quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .flux_model import VelocityModel
from .initial_data import StepDensity, cumulative_masses, total_mass, total_variation
from .particle_scheme import Trajectory

MASS_RTOL = 1e-12


class MassMismatch(ValueError):
    pass


class DiscreteDensity:
    """Piecewise constant in space and time: slice ``m`` holds on ``[t^m, t^{m+1})``."""

    def __init__(self, traj: Trajectory):
        self.traj = traj
        self.tau = traj.tau
        self.T = traj.T
        self.M = traj.M
        self.L = traj.L
        self._R = traj.densities()

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> DiscreteDensity:
        return cls(traj)

    def level(self, t: float) -> int:
        """Index of the time level whose slab contains ``t``; ``T`` maps to ``M``."""
        if not (-1e-12 * max(1.0, self.T) <= t <= self.T * (1 + 1e-12)):
            raise ValueError(f"t={t} outside [0, {self.T}]")
        if self.M == 0:
            return 0
        # the small shift keeps t = m*tau on level m despite rounding in t/tau
        m = int(math.floor(t / self.tau + 1e-9))
        return min(max(m, 0), self.M)

    def slice(self, m: int) -> StepDensity:
        return StepDensity(self.traj.positions[m], self._R[m])

    def slice_at(self, t: float) -> StepDensity:
        return self.slice(self.level(t))

    def values(self, m: int) -> np.ndarray:
        return self._R[m]


def density_at(D: DiscreteDensity, x, t: float):
    return D.slice_at(t)(x)


def slice_tv(D: DiscreteDensity, m: int) -> float:
    R = D.values(m)
    return float(R[0] + np.sum(np.abs(np.diff(R))) + R[-1])


def slice_mass(D: DiscreteDensity, m: int) -> float:
    return math.fsum(D.values(m) * np.diff(D.traj.positions[m]))


def l1_distance(A: StepDensity, B: StepDensity) -> float:
    """Exact ``int |A - B|`` by sweeping the merged breakpoints."""
    x = np.union1d(A.breakpoints, B.breakpoints)
    mid = 0.5 * (x[:-1] + x[1:])
    return math.fsum(np.abs(A(mid) - B(mid)) * np.diff(x))


@dataclass(frozen=True, eq=False)
class PseudoInverse:
    """Continuous piecewise-linear ``X`` on ``[0, L]`` through ``(z_knots, x_knots)``."""

    z_knots: np.ndarray
    x_knots: np.ndarray

    @property
    def L(self) -> float:
        return float(self.z_knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.x_knots) / np.diff(self.z_knots)

    def __call__(self, z):
        return np.interp(z, self.z_knots, self.x_knots)


def pseudo_inverse(d: StepDensity) -> PseudoInverse:
    """Generalized inverse of the CDF of ``d``.

    Leading and trailing vacuum cells are dropped; a vacuum cell inside the
    support would make ``X`` jump and is rejected.
    """
    lo, hi = d.support()
    keep = (d.breakpoints[:-1] >= lo) & (d.breakpoints[1:] <= hi)
    vals = d.values[keep]
    if np.any(vals <= 0):
        raise ValueError("pseudo_inverse needs positive values on every cell inside the support")
    x = np.append(d.breakpoints[:-1][keep], hi)
    trimmed = StepDensity(x, vals)
    return PseudoInverse(cumulative_masses(trimmed), x)


def pseudo_inverse_of_positions(positions, ell: float) -> PseudoInverse:
    """For a particle slice the knots are exactly ``(i ell, x_i)``."""
    x = np.asarray(positions, dtype=float)
    return PseudoInverse(np.arange(x.size) * ell, x.copy())


def _abs_linear_integral(p: np.ndarray, q: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``int_0^h |p + (q - p) s/h| ds`` per segment, splitting at the sign change."""
    same = p * q >= 0
    ap, aq = np.abs(p), np.abs(q)
    denom = np.where(same, 1.0, ap + aq)
    return np.where(same, 0.5 * h * (ap + aq), 0.5 * h * (p * p + q * q) / denom)


def d1_between(XA: PseudoInverse, XB: PseudoInverse) -> float:
    LA, LB = XA.L, XB.L
    if not math.isclose(LA, LB, rel_tol=MASS_RTOL):
        raise MassMismatch(f"masses differ: {LA!r} vs {LB!r}")
    L = min(LA, LB)
    z = np.union1d(XA.z_knots[XA.z_knots < L], XB.z_knots[XB.z_knots < L])
    z = np.append(z, L)
    diff = XA(z) - XB(z)
    return math.fsum(_abs_linear_integral(diff[:-1], diff[1:], np.diff(z)))


def wasserstein_d1(A: StepDensity, B: StepDensity) -> float:
    """Scaled 1-Wasserstein distance ``||X_A - X_B||_{L1(0, L)}`` (no mass normalization)."""
    return d1_between(pseudo_inverse(A), pseudo_inverse(B))


class InterpolationCheck(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


def interpolation_bound_check(A: StepDensity, B: StepDensity) -> InterpolationCheck:
    """``||A - B||_1 <= 2 (TV A + TV B)^{1/2} d1(A, B)^{1/2}``."""
    lhs = l1_distance(A, B)
    rhs = 2.0 * math.sqrt(total_variation(A) + total_variation(B)) * math.sqrt(wasserstein_d1(A, B))
    return InterpolationCheck(lhs, rhs, lhs <= rhs * (1 + 1e-9))


class TimeContinuity(NamedTuple):
    d1: float
    d1_bound: float
    l1: float
    l1_bound: float
    passed: bool


def time_continuity_check(D: DiscreteDensity, t1: float, t2: float, model: VelocityModel) -> TimeContinuity:
    """Compare slices at ``t1 <= t2`` against ``4 L V (dt + tau)`` and its L1 counterpart."""
    if not 0.0 <= t1 <= t2 <= D.T * (1 + 1e-12):
        raise ValueError(f"need 0 <= t1 <= t2 <= T, got {t1}, {t2}")
    m1, m2 = D.level(t1), D.level(t2)
    pos = D.traj.positions
    d1 = d1_between(pseudo_inverse_of_positions(pos[m2], D.traj.ell),
                    pseudo_inverse_of_positions(pos[m1], D.traj.ell))
    span = t2 - t1 + D.tau
    L, V = D.L, model.V
    d1_bound = 4.0 * L * V * span
    l1 = l1_distance(D.slice(m2), D.slice(m1))
    C = 4.0 * math.sqrt(2.0 * total_variation(D.traj.initial) * L * V)
    l1_bound = C * math.sqrt(span)
    ok = d1 <= d1_bound * (1 + 1e-9) and l1 <= l1_bound * (1 + 1e-9)
    return TimeContinuity(d1, d1_bound, l1, l1_bound, ok)


def interpolated_trajectory(traj: Trajectory, t: float) -> np.ndarray:
    """Particle positions linear in time between stored levels (diagnostics only)."""
    if not 0.0 <= t <= traj.T * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {traj.T}]")
    if traj.M == 0:
        return traj.positions[0].copy()
    s = t / traj.tau
    m = min(int(math.floor(s)), traj.M - 1)
    frac = s - m
    if frac == 0.0:
        return traj.positions[m].copy()
    if m + 1 == traj.M and frac >= 1.0:
        return traj.positions[-1].copy()
    return traj.positions[m] + frac * (traj.positions[m + 1] - traj.positions[m])


def check_mass(D: DiscreteDensity) -> float:
    """Largest relative mass defect over all slices."""
    L = total_mass(D.traj.initial)
    return max(abs(slice_mass(D, m) - L) / L for m in range(D.M + 1))


def diagnostics(D: DiscreteDensity):
    """Rows ``(m, t, tv, mass, d1_from_initial)``; d1 is measured from slice 0."""
    X0 = pseudo_inverse_of_positions(D.traj.positions[0], D.traj.ell)
    rows = []
    for m in range(D.M + 1):
        Xm = pseudo_inverse_of_positions(D.traj.positions[m], D.traj.ell)
        rows.append((m, m * D.tau, slice_tv(D, m), slice_mass(D, m), d1_between(Xm, X0)))
    return rows


def write_density_csv(d: StepDensity, path) -> None:
    with open(path, "w") as fh:
        fh.write("x_left,x_right,value\n")
        for a, b, r in zip(d.breakpoints[:-1], d.breakpoints[1:], d.values):
            fh.write(f"{float(a)!r},{float(b)!r},{float(r)!r}\n")


def write_diagnostics_csv(D: DiscreteDensity, path) -> None:
    with open(path, "w") as fh:
        fh.write("m,t,tv,mass,d1_from_initial\n")
        for m, t, tv, mass, d1 in diagnostics(D):
            fh.write(f"{m},{t!r},{tv!r},{mass!r},{d1!r}\n")
