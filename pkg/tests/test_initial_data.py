import numpy as np
import pytest

from ftl_theta.initial_data import (
    DensityError,
    StepDensity,
    parse_steps,
    place_particles,
    quantile,
    read_steps,
    total_mass,
    total_variation,
)

BOXES = StepDensity([0, 1, 2, 3], [1, 0, 1])


def test_mass(rarefaction_data):
    assert total_mass(rarefaction_data) == pytest.approx(1.2, rel=1e-15)
    assert total_mass(StepDensity([0, 1], [1])) == 1.0
    assert total_mass(BOXES) == 2.0


def test_total_variation(rarefaction_data):
    assert total_variation(rarefaction_data) == pytest.approx(1.6, rel=1e-15)
    assert total_variation(StepDensity([0, 1], [0.3])) == pytest.approx(0.6)
    assert total_variation(BOXES) == 4.0


def test_placement_uniform():
    s = place_particles(StepDensity([0, 1], [1]), 4)
    np.testing.assert_allclose(s.positions, [0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)


def test_placement_jumps_vacuum():
    s = place_particles(BOXES, 4)
    np.testing.assert_allclose(s.positions, [0, 0.5, 1.0, 2.5, 3.0], atol=1e-15)
    assert s.ell == 0.5


def test_placement_benchmark(rarefaction_data):
    s = place_particles(rarefaction_data, 100)
    assert s.positions.size == 101
    assert s.positions[0] == -1.0 and s.positions[-1] == 1.0
    assert s.ell == pytest.approx(0.012, rel=1e-14)
    np.testing.assert_allclose(s.densities, np.r_[np.full(66, 0.8), 0.6, np.full(33, 0.4)], rtol=1e-9)


def test_quantile_left_convention():
    assert quantile(BOXES, 1.0) == 1.0


def test_parsing_errors(tmp_path):
    with pytest.raises(DensityError):
        parse_steps("steps:0:1")
    with pytest.raises(DensityError):
        StepDensity([0, 1], [-1])
    f = tmp_path / "d.txt"
    f.write_text("# box\n0 1\n1\n")
    assert total_mass(read_steps(f)) == 1.0
