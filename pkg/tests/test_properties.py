"""Hypothesis-driven invariants of the scheme and the transport metrics."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ftl_theta.flux_model import affine
from ftl_theta.initial_data import StepDensity, place_particles, total_mass, total_variation
from ftl_theta.particle_scheme import SchemeConfig, check_cfl, implicit_gap_solve, run
from ftl_theta.reconstruction import (
    DiscreteDensity,
    interpolation_bound_check,
    l1_distance,
    slice_mass,
    slice_tv,
    wasserstein_d1,
)

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def step_densities(draw, R=1.0, positive=False):
    K = draw(st.integers(1, 5))
    widths = draw(st.lists(st.floats(0.05, 1.0), min_size=K, max_size=K))
    vals = draw(st.lists(st.floats(0.0, R), min_size=K, max_size=K))
    if positive:
        vals = [max(v, 0.05) for v in vals]
    vals[0] = max(vals[0], 0.05)
    vals[-1] = max(vals[-1], 0.05)
    x0 = draw(st.floats(-2, 2))
    return StepDensity(x0 + np.r_[0.0, np.cumsum(widths)], vals)


@st.composite
def cases(draw):
    R = draw(st.floats(0.5, 2.0))
    model = affine(draw(st.floats(-1.0, 1.5)), draw(st.floats(0.2, 2.0)), R)
    d = draw(step_densities(R=R))
    theta = draw(st.sampled_from([0.0, 1.0]) | st.floats(0.0, 1.0))
    N = draw(st.integers(2, 30))
    T = draw(st.floats(0.1, 1.0))
    m_min = check_cfl(SchemeConfig(theta, N, 1, T), model, total_mass(d)).min_steps
    M = max(m_min, draw(st.integers(1, 30)))
    return model, d, SchemeConfig(theta, N, M, T)


@FAST
@given(cases())
def test_scheme_invariants(case):
    model, d, cfg = case
    traj = run(d, cfg, model)
    D = DiscreteDensity(traj)
    R = traj.densities()
    assert np.all(R > 0) and np.all(R <= model.R * (1 + 1e-12))
    tv = [slice_tv(D, m) for m in range(traj.M + 1)]
    assert all(b <= a + 1e-10 for a, b in zip(tv, tv[1:]))
    assert tv[0] <= total_variation(d) + 1e-12
    L = total_mass(d)
    assert all(abs(slice_mass(D, m) - L) <= 1e-12 * L for m in range(traj.M + 1))
    assert np.all(np.diff(R[:, -1]) <= 1e-12)


@FAST
@given(st.floats(-3, 3), st.floats(0.01, 2.0), st.floats(0.01, 1.0), st.floats(0.001, 0.5),
       st.floats(0.0, 0.999))
def test_implicit_solve_residual(rhs, gap, ell, tau, theta):
    model = affine(0.5, 1.0, 1.0)
    x, res = implicit_gap_solve(rhs, rhs + gap, ell, tau, theta, model)
    assert abs(res) <= 1e-13 * max(1.0, abs(rhs))
    rho = ell / (rhs + gap - x) if rhs + gap > x else math.inf
    assert abs(x - (1 - theta) * tau * model.v_ext(rho) - rhs) <= 1e-12 * max(1.0, abs(rhs))


@FAST
@given(step_densities(positive=True), step_densities(positive=True))
def test_interpolation_inequality(A, B):
    B = StepDensity(B.breakpoints, B.values * (total_mass(A) / total_mass(B)))
    assert interpolation_bound_check(A, B).passed


@FAST
@given(step_densities(positive=True), st.floats(-1, 1))
def test_translation_distances(A, h):
    B = StepDensity(A.breakpoints + h, A.values)
    assert math.isclose(wasserstein_d1(A, B), total_mass(A) * abs(h), rel_tol=1e-9, abs_tol=1e-12)
    assert l1_distance(A, B) <= total_variation(A) * abs(h) * (1 + 1e-9) + 1e-12


@FAST
@given(step_densities(), st.integers(1, 50))
def test_placement_quantiles(d, N):
    s = place_particles(d, N)
    assert np.all(np.diff(s.positions) > 0)
    assert math.isclose(math.fsum(s.densities * s.gaps), total_mass(d), rel_tol=1e-12)
