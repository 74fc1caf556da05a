import math

import numpy as np
import pytest

from wavebem.errors import ValidationError
from wavebem.geometry import build_circle, build_interval, build_sphere
from wavebem.oracle import PlaneWave, Profile, StandingWave1D
from wavebem.verification import (
    EnergyDensities,
    FrontGeometry,
    check_spacetime_normal,
    energy_balance_residual,
    front_energy_jump_check,
    gauss_residual_2d,
    gauss_residual_3d,
    hadamard_jump_check,
    lagrangian_balance_residual,
    static_gauss_3d,
    volume_rule,
)


def step_wave(speed):
    def f(p, t):
        s = speed * t - p[:, 0]
        on = (s > 0).astype(float)
        return np.maximum(s, 0.0), speed * on, -on[:, None]

    return f


def planar_front(speed, c=1.0):
    return FrontGeometry(lambda t: np.array([[speed * t]]), lambda p, t: np.ones_like(p), c)


def test_spacetime_normal_validation():
    good = np.array([[1.0, -1.0]]) / math.sqrt(2)
    assert check_spacetime_normal(good).shape == (1, 2)
    for bad in ([[1.0, 1.0]], [[1.0, -2.0]], [[1.0]]):
        with pytest.raises(ValidationError):
            check_spacetime_normal(bad)


def test_front_requires_unit_normals():
    front = FrontGeometry(lambda t: np.array([[t, 0.0]]), lambda p, t: 2 * np.ones_like(p), 1.0)
    with pytest.raises(ValidationError):
        front.samples(0.5)


def test_energy_densities():
    d = EnergyDensities.from_field(np.array([2.0]), np.array([[1.0, 0.0]]), 2.0)
    assert d.E[0] == pytest.approx(1.0) and d.L[0] == pytest.approx(0.0)


def test_correct_step_front_has_no_jump_residuals():
    h = hadamard_jump_check(step_wave(1.0), planar_front(1.0), 0.6)
    e = front_energy_jump_check(step_wave(1.0), planar_front(1.0), 0.6)
    assert not h.inconclusive and not e.inconclusive
    assert max(h.value, h.compat, h.tangential) < 1e-6
    assert max(e.energy, e.lagrangian) < 1e-6


def test_wrong_speed_front_is_detected():
    h = hadamard_jump_check(step_wave(1.2), planar_front(1.2, c=1.0), 0.7)
    assert h.compat >= 0.1


def test_smooth_field_has_no_jumps():
    pw = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=2.0))
    front = FrontGeometry(lambda t: np.array([[t - 1.0, 0.3]]), lambda p, t: np.tile([1.0, 0.0], (len(p), 1)))
    h = hadamard_jump_check(pw.eval, front, 1.5)
    assert max(h.value, h.compat, h.tangential) < 1e-5


@pytest.mark.parametrize("x", [(0.2, 0.1), (1.4, 0.3)])
def test_gauss_2d_points(x):
    mesh = build_circle((0, 0), 1.0, 128)
    for t in (0.4, 1.2, 3.0):
        assert abs(gauss_residual_2d(mesh, x, t)) < 1e-2 * 2 * math.pi


def test_gauss_3d_dynamic_and_static():
    mesh = build_sphere((0, 0, 0), 1.0, 2)
    assert abs(gauss_residual_3d(mesh, (0.1, 0.2, 0.3), 0.9, static=False)) < 0.13
    assert static_gauss_3d(mesh, (0.1, 0.2, 0.3)) == pytest.approx(4 * math.pi, rel=1e-10)
    assert static_gauss_3d(mesh, mesh.centroids[11]) == pytest.approx(2 * math.pi, rel=1e-10)
    assert abs(static_gauss_3d(mesh, (2.0, 0.0, 0.0))) < 1e-12


@pytest.mark.parametrize("mesh,center", [(build_circle((0.1, 0.0), 1.0, 40), (0.1, 0.0)),
                                         (build_sphere((0, 0, 0), 1.0, 1), (0.0, 0.0, 0.0))])
def test_volume_rule_volume_and_centroid(mesh, center):
    pts, w = volume_rule(mesh, 6)
    assert w.sum() == pytest.approx(mesh.signed_volume(), rel=1e-12)
    # symmetric regions: the centroid is the symmetry centre
    assert np.allclose(pts.T @ w / w.sum(), center, atol=1e-12)


def test_energy_balance_exact_fields():
    iv = build_interval(0.0, 1.0)
    sw = StandingWave1D()
    assert abs(energy_balance_residual(sw.eval, iv, 0.7)) < 1e-8
    assert abs(lagrangian_balance_residual(sw.eval, iv, 0.7)) < 1e-8
    circle = build_circle((0, 0), 1.0, 64)
    pw = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=2.0), offset=1.05)
    assert abs(energy_balance_residual(pw.eval, circle, 2.0)) < 1e-6
    assert abs(lagrangian_balance_residual(pw.eval, circle, 2.0)) < 1e-6


def test_energy_balance_detects_wrong_field():
    circle = build_circle((0, 0), 1.0, 64)
    pw = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=2.0), offset=1.05)

    def too_fast(p, t):
        u, ut, g = pw.eval(p, t)
        return u, 1.5 * ut, g

    assert abs(energy_balance_residual(too_fast, circle, 2.0)) > 0.05
