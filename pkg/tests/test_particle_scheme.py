import math

import numpy as np
import pytest

from ftl_theta.flux_model import affine
from ftl_theta.initial_data import StepDensity, place_particles
from ftl_theta.particle_scheme import (
    CFLViolation,
    ParticleState,
    SchemeConfig,
    check_cfl,
    implicit_gap_solve,
    rightmost_update,
    run,
    step,
)


def test_cfl_minimal_steps(lwr):
    rep = check_cfl(SchemeConfig(1.0, 100, 84, 1.0), lwr, 1.2)
    assert rep.passed and rep.min_steps == 84
    assert not check_cfl(SchemeConfig(1.0, 100, 83, 1.0), lwr, 1.2).passed
    assert check_cfl(SchemeConfig(1.0, 100, 85, 1.0), lwr, 1.2).passed


def test_cfl_implicit_always_passes(lwr):
    for M in (1, 2, 7):
        assert check_cfl(SchemeConfig(0.0, 100, M, 1.0), lwr, 1.2).passed


def test_cfl_explicit_fails_when_tau_exceeds_ell(lwr):
    # tau = 0.02, ell = 0.01
    assert not check_cfl(SchemeConfig(1.0, 100, 50, 1.0), lwr, 1.0).passed


def test_run_refuses_cfl_violation(lwr, rarefaction_data):
    with pytest.raises(CFLViolation):
        run(rarefaction_data, SchemeConfig(1.0, 100, 83, 1.0), lwr)


@pytest.mark.parametrize("xN,tau,model,expected", [
    (1.0, 0.01, affine(0.5, 1.0), 1.005),
    (0.3, 0.5, affine(0.0, 1.0), 0.3),
    (0.0, 0.1, affine(-1.0, 1.0), -0.1),
])
def test_rightmost_update(xN, tau, model, expected):
    s = ParticleState(np.array([xN - 1.0, xN]), 1.0)
    assert rightmost_update(s, tau, model) == pytest.approx(expected, abs=1e-15)


def test_implicit_fixed_point_is_rhs(lwr):
    x, res = implicit_gap_solve(0.0, 1.0, 0.5, 0.1, 0.0, lwr)
    assert x == pytest.approx(0.0, abs=1e-12) and abs(res) <= 1e-13


def test_implicit_quadratic_root(lwr):
    x, _ = implicit_gap_solve(0.0, 2.0, 0.5, 0.1, 0.0, lwr)
    root = (2.05 - math.sqrt(2.05 ** 2 - 0.2)) / 2
    assert abs(x - root) <= 1e-12
    assert x == pytest.approx(0.024687548812872166, abs=1e-15)


def test_implicit_degenerates_at_theta_one(lwr):
    assert implicit_gap_solve(0.37, 2.0, 0.5, 0.1, 1.0, lwr) == (0.37, 0.0)


def test_single_gap_explicit_step(lwr):
    s = ParticleState(np.array([0.0, 1.0]), 1.0)
    new = step(s, SchemeConfig(1.0, 1, 1, 0.1), lwr)
    np.testing.assert_allclose(new.positions - s.positions, [-0.05, 0.05], atol=1e-15)
    assert new.time_index == 1


def test_explicit_step_bitmatches_formula(lwr, rarefaction_data):
    s = place_particles(rarefaction_data, 100)
    cfg = SchemeConfig(1.0, 100, 100, 1.0)
    new = step(s, cfg, lwr)
    x, R = s.positions, s.densities
    expected = np.r_[x[:-1] + cfg.tau * (0.5 - R), x[-1] + cfg.tau * 0.5]
    assert np.array_equal(new.positions, expected)


def test_constant_data_keeps_uniform_interior(lwr):
    d = StepDensity([0, 1], [0.6])
    traj = run(d, SchemeConfig(0.3, 20, 30, 0.5), lwr)
    R = traj.densities()
    assert np.all(R[:, :-1] <= 0.6 + 1e-12)
    np.testing.assert_allclose(R[0], 0.6, rtol=1e-13)


def test_zero_steps_returns_initial(lwr, rarefaction_data):
    traj = run(rarefaction_data, SchemeConfig(0.0, 10, 0, 1.0), lwr)
    assert traj.positions.shape == (1, 11)
    assert traj.M == 0


def test_implicit_residuals_within_tolerance(lwr, shock_data):
    traj = run(shock_data, SchemeConfig(0.5, 40, 30, 1.0), lwr)
    assert np.all(np.abs(traj.residuals) <= traj.tolerances)


def test_trajectory_csv(tmp_path, lwr, rarefaction_data):
    traj = run(rarefaction_data, SchemeConfig(0.0, 4, 2, 0.1), lwr)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "m,t,i,x"
    assert len(lines) == 1 + 3 * 5
