"""Piecewise-constant densities and quantile placement of the initial particles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DensityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StepDensity:
    """Compactly supported step function.

    ``values[k]`` holds on ``[breakpoints[k], breakpoints[k+1])``; the density
    vanishes outside ``[breakpoints[0], breakpoints[-1])``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.breakpoints, dtype=float)
        r = np.array(self.values, dtype=float)
        if x.ndim != 1 or r.ndim != 1 or x.size != r.size + 1 or r.size == 0:
            raise DensityError("need K+1 breakpoints for K values (K >= 1)")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
            raise DensityError("breakpoints and values must be finite")
        if np.any(np.diff(x) <= 0):
            raise DensityError("breakpoints must be strictly increasing")
        if np.any(r < 0):
            raise DensityError("density values must be nonnegative")
        x.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", r)
        if not total_mass(self) > 0:
            raise DensityError("density must have positive mass")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    def support(self) -> tuple[float, float]:
        """``(min supp, max supp)``: outer edges of the first/last positive piece."""
        pos = np.flatnonzero(self.values > 0)
        return float(self.breakpoints[pos[0]]), float(self.breakpoints[pos[-1] + 1])

    def __call__(self, x):
        """Evaluate with the right-open cell convention."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.where(inside, self.values[np.clip(idx, 0, self.values.size - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def check_bounds(self, R: float) -> None:
        if self.max_value > R:
            raise DensityError(f"density exceeds the maximal density R={R}: {self.max_value}")


def total_mass(d: StepDensity) -> float:
    return math.fsum(d.values * d.widths)


def total_variation(d: StepDensity) -> float:
    r = d.values
    return float(r[0] + np.sum(np.abs(np.diff(r))) + r[-1])


def from_pairs(pairs, right_end: float) -> StepDensity:
    """Build from ``[(x0, rho0), (x1, rho1), ...]`` and the right endpoint."""
    xs = [float(p[0]) for p in pairs] + [float(right_end)]
    return StepDensity(np.array(xs), np.array([float(p[1]) for p in pairs]))


def parse_steps(text: str) -> StepDensity:
    """Parse ``steps:-1:0.8,0:0.4,1`` (``breakpoint:value`` pairs, then the right end)."""
    body = text.split("steps:", 1)[1] if text.startswith("steps:") else text
    tokens = [t.strip() for t in body.split(",") if t.strip()]
    if len(tokens) < 2:
        raise DensityError(f"need at least one breakpoint:value pair and a right endpoint: {text!r}")
    try:
        pairs = [tuple(map(float, t.split(":"))) for t in tokens[:-1]]
        right = float(tokens[-1])
    except ValueError:
        raise DensityError(f"cannot parse step density {text!r}") from None
    if any(len(p) != 2 for p in pairs):
        raise DensityError(f"malformed breakpoint:value pair in {text!r}")
    return from_pairs(pairs, right)


def read_steps(path: str | Path) -> StepDensity:
    """One ``breakpoint value`` pair per line, final line is the right endpoint alone."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.replace(",", " ").split())
    if len(rows) < 2 or len(rows[-1]) != 1 or any(len(r) != 2 for r in rows[:-1]):
        raise DensityError(f"{path}: expected 'x value' lines followed by a lone right endpoint")
    try:
        return from_pairs([(float(a), float(b)) for a, b in rows[:-1]], float(rows[-1][0]))
    except ValueError:
        raise DensityError(f"{path}: non-numeric entry") from None


def cumulative_masses(d: StepDensity) -> np.ndarray:
    """Mass to the left of each breakpoint, accumulated with ``math.fsum``."""
    masses = d.values * d.widths
    return np.array([0.0] + [math.fsum(masses[: k + 1]) for k in range(masses.size)])


def cdf(d: StepDensity, x):
    """Cumulative mass ``F(x)``; piecewise linear, 0 on the left, ``L`` on the right."""
    return np.interp(x, d.breakpoints, cumulative_masses(d))


def quantile(d: StepDensity, z):
    """Smallest ``x`` with ``F(x) >= z`` for ``0 < z <= L`` (closed form per piece)."""
    cum = cumulative_masses(d)
    z = np.asarray(z, dtype=float)
    # first breakpoint index whose cumulative mass reaches z; zero pieces share
    # the cumulative value of their left neighbour, so 'left' skips plateaus
    j = np.clip(np.searchsorted(cum, z, side="left"), 1, d.values.size)
    k = j - 1
    x = d.breakpoints[k] + (z - cum[k]) / np.where(d.values[k] > 0, d.values[k], 1.0)
    x = np.minimum(x, d.breakpoints[j])
    return x


def place_particles(d: StepDensity, N: int):
    """Initial particle positions: ``x_0 = min supp``, then successive mass-``ell`` quantiles.

    Returns a :class:`~ftl_theta.particle_scheme.ParticleState` with ``N+1``
    positions and ``ell = L/N``.
    """
    from .particle_scheme import ParticleState

    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    N = int(N)
    L = total_mass(d)
    ell = L / N
    lo, hi = d.support()
    x = np.empty(N + 1)
    x[0] = lo
    if N > 1:
        x[1:N] = quantile(d, np.arange(1, N) * L / N)
    x[N] = hi
    if np.any(np.diff(x) <= 0):
        raise DensityError("quantile placement produced non-increasing positions")
    return ParticleState(positions=x, ell=ell, time_index=0)
