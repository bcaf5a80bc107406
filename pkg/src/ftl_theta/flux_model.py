"""Velocity laws v(rho), their flat extension and the flux f(rho) = rho v(rho)."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

MONOTONICITY_SAMPLES = 10_001


class VelocityModelError(ValueError):
    """Raised for velocity laws that are not strictly decreasing or are malformed."""


@dataclass(frozen=True)
class VelocityModel:
    """A strictly decreasing velocity law on ``[0, R]``.

    ``v`` and ``v_prime`` must accept floats and numpy arrays.  ``lip`` may be
    any upper bound of ``|v'|``; ``V`` is ``max(|v(0)|, |v(R)|)``.
    """

    R: float
    v: Callable
    v_prime: Callable
    lip: float
    V: float
    name: str = "custom"
    # (a, b) when v = a - b rho; enables closed-form oracles
    affine_coeffs: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise VelocityModelError(f"maximal density must be positive and finite, got {self.R}")
        rho = np.linspace(0.0, self.R, MONOTONICITY_SAMPLES)
        dv = np.asarray(self.v_prime(rho), dtype=float)
        if dv.shape != rho.shape:
            dv = np.broadcast_to(dv, rho.shape)
        if not np.all(np.isfinite(dv)):
            raise VelocityModelError("v' is not finite on [0, R]")
        if np.any(dv >= 0.0):
            bad = float(rho[np.argmax(dv >= 0.0)])
            raise VelocityModelError(f"v must be strictly decreasing: v'({bad:g}) >= 0")
        if self.lip < float(np.max(np.abs(dv))) * (1.0 - 1e-12):
            raise VelocityModelError(
                f"lip={self.lip} is below the sampled max |v'| = {np.max(np.abs(dv))}"
            )
        v_sup = max(abs(float(self.v(0.0))), abs(float(self.v(self.R))))
        if not math.isclose(self.V, v_sup, rel_tol=1e-12, abs_tol=1e-15):
            raise VelocityModelError(f"V={self.V} differs from max(|v(0)|, |v(R)|) = {v_sup}")

    @property
    def v0(self) -> float:
        return float(self.v(0.0))

    @property
    def vR(self) -> float:
        return float(self.v(self.R))

    def v_ext(self, rho):
        """Flat extension: ``v(0)`` below 0, ``v(R)`` above ``R``."""
        return eval_v_extended(self, rho)

    def flux(self, rho):
        return flux(self, rho)

    def flux_prime(self, rho):
        """Derivative f'(rho) = v(rho) + rho v'(rho) on ``[0, R]``."""
        rho = np.asarray(rho, dtype=float)
        out = self.v(rho) + rho * self.v_prime(rho)
        return float(out) if out.ndim == 0 else out

    def max_flux_speed(self, samples: int = 4097) -> float:
        """Upper estimate of max |f'| over ``[0, R]`` from uniform samples."""
        rho = np.linspace(0.0, self.R, samples)
        return float(np.max(np.abs(self.flux_prime(rho))))


def eval_v_extended(model: VelocityModel, rho):
    """Evaluate ``v`` with constant extension outside ``[0, R]``.

    Works on scalars (returns float) and arrays.
    """
    if np.ndim(rho) == 0:
        r = float(rho)
        if r < 0.0:
            return float(model.v(0.0))
        if r > model.R:
            return float(model.v(model.R))
        return float(model.v(r))
    r = np.clip(np.asarray(rho, dtype=float), 0.0, model.R)
    return np.asarray(model.v(r), dtype=float)


def flux(model: VelocityModel, rho):
    """Flux ``rho * v(rho)``; ``rho`` must lie in ``[0, R]``."""
    arr = np.asarray(rho, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > model.R) or not np.all(np.isfinite(arr)):
        raise ValueError(f"flux is defined on [0, {model.R}] only")
    out = arr * model.v(arr)
    return float(out) if np.ndim(out) == 0 else out


# -- builtin families -------------------------------------------------------


def affine(a: float, b: float, R: float = 1.0) -> VelocityModel:
    """``v(rho) = a - b rho``; strictly decreasing iff ``b > 0``."""
    a = float(a)
    b = float(b)
    if not b > 0:
        raise VelocityModelError(f"affine velocity a - b*rho is not decreasing for b={b}")
    return VelocityModel(
        R=float(R),
        v=lambda rho: a - b * rho,
        v_prime=lambda rho: np.full(np.shape(rho), -b) if np.ndim(rho) else -b,
        lip=b,
        V=max(abs(a), abs(a - b * R)),
        name=f"affine(a={a:g},b={b:g})",
        affine_coeffs=(a, b),
    )


def greenshields(vmax: float, R: float = 1.0, offset: float = 0.0) -> VelocityModel:
    """Greenshields law ``v = vmax (1 - rho/R) - offset``.

    The offset lets the velocity change sign, which the scheme allows.
    """
    if not vmax > 0:
        raise VelocityModelError("greenshields needs vmax > 0")
    model = affine(vmax - offset, vmax / R, R)
    return dataclasses.replace(model, name=f"greenshields(vmax={vmax:g},offset={offset:g})")


def underwood(vmax: float, rho_c: float, R: float = 1.0, offset: float = 0.0) -> VelocityModel:
    """``v = vmax exp(-rho/rho_c) - offset``; |v'| is largest at rho = 0."""
    vmax = float(vmax)
    rho_c = float(rho_c)
    if not (vmax > 0 and rho_c > 0):
        raise VelocityModelError("underwood needs vmax > 0 and rho_c > 0")
    return VelocityModel(
        R=float(R),
        v=lambda rho: vmax * np.exp(-np.asarray(rho, dtype=float) / rho_c) - offset,
        v_prime=lambda rho: -(vmax / rho_c) * np.exp(-np.asarray(rho, dtype=float) / rho_c),
        lip=vmax / rho_c,
        V=max(abs(vmax - offset), abs(vmax * math.exp(-R / rho_c) - offset)),
        name=f"underwood(vmax={vmax:g},rho_c={rho_c:g})",
    )


def tabulated(rho_nodes: Sequence[float], v_nodes: Sequence[float]) -> VelocityModel:
    """Piecewise-linear interpolant of a strictly decreasing table.

    ``R`` is the last node; ``lip`` is the largest absolute slope, which is
    exact for the interpolant.  At a node ``v'`` is the slope of the segment
    to its right (left one at ``R``).
    """
    r = np.asarray(rho_nodes, dtype=float)
    w = np.asarray(v_nodes, dtype=float)
    if r.ndim != 1 or r.shape != w.shape or r.size < 2:
        raise VelocityModelError("tabulated model needs two equal-length node lists (>= 2 nodes)")
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise VelocityModelError("density nodes must start at 0 and increase strictly")
    slopes = np.diff(w) / np.diff(r)
    if np.any(slopes >= 0):
        raise VelocityModelError("tabulated velocity must be strictly decreasing")

    def v(rho):
        return np.interp(rho, r, w) if np.ndim(rho) else float(np.interp(rho, r, w))

    def v_prime(rho):
        idx = np.clip(np.searchsorted(r, rho, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    return VelocityModel(
        R=float(r[-1]),
        v=v,
        v_prime=v_prime,
        lip=float(np.max(np.abs(slopes))),
        V=max(abs(float(w[0])), abs(float(w[-1]))),
        name="tabulated",
    )


_FAMILIES = {
    "affine": (affine, ("a", "b")),
    "greenshields": (greenshields, ("vmax", "offset")),
    "underwood": (underwood, ("vmax", "rho_c", "offset")),
}


def builtin_models(name: str, params: dict[str, float] | Sequence[float] = (), R: float = 1.0) -> VelocityModel:
    """Build a named velocity family.

    ``params`` is either a mapping of parameter names or a positional list.
    For ``tabulated`` pass ``{"rho": [...], "v": [...]}`` or a flat list
    ``[rho0, v0, rho1, v1, ...]``.
    """
    if name == "tabulated":
        if isinstance(params, dict):
            return tabulated(params["rho"], params["v"])
        flat = list(params)
        if len(flat) % 2:
            raise VelocityModelError("tabulated params must be (rho, v) pairs")
        return tabulated(flat[0::2], flat[1::2])
    try:
        factory, names = _FAMILIES[name]
    except KeyError:
        raise VelocityModelError(
            f"unknown velocity family {name!r}; choose from {sorted(_FAMILIES) + ['tabulated']}"
        ) from None
    if isinstance(params, dict):
        unknown = set(params) - set(names)
        if unknown:
            raise VelocityModelError(f"unknown parameters {sorted(unknown)} for {name}")
        kwargs = {k: float(val) for k, val in params.items()}
    else:
        values = list(params)
        if len(values) > len(names):
            raise VelocityModelError(f"{name} takes at most {len(names)} parameters")
        kwargs = dict(zip(names, map(float, values)))
    try:
        return factory(R=float(R), **kwargs)
    except TypeError as exc:
        raise VelocityModelError(f"bad parameters for {name}: {exc}") from None


def parse_velocity(text: str, R: float = 1.0) -> VelocityModel:
    """Parse a CLI descriptor such as ``affine:a=0.5,b=1``.

    Tabulated laws use ``tabulated:0:1,0.5:0.2,1:-0.5`` (``rho:v`` pairs).
    """
    name, _, rest = text.partition(":")
    name = name.strip()
    if name == "tabulated":
        pairs = [p.split(":") for p in rest.split(",") if p.strip()]
        try:
            rho = [float(p[0]) for p in pairs]
            vel = [float(p[1]) for p in pairs]
        except (IndexError, ValueError):
            raise VelocityModelError(f"cannot parse tabulated velocity {text!r}") from None
        return tabulated(rho, vel)
    params: dict[str, float] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise VelocityModelError(f"expected key=value in velocity descriptor, got {item!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise VelocityModelError(f"non-numeric velocity parameter {item!r}") from None
    return builtin_models(name, params, R=R)
