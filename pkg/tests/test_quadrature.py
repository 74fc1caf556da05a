import math

import numpy as np
import pytest

from wavebem.errors import ValidationError
from wavebem.geometry import DomainIndicator, build_circle, build_sphere
from wavebem.quadrature import (
    QuadratureConfig,
    TimeGrid,
    disk_volume_integral_2d,
    pv_boundary_integral,
    retarded_surface_integral_3d,
    segment_rule,
    sphere_slice_integral,
    triangle_rule,
    weakly_singular_time_integral,
)


def test_time_grid():
    g = TimeGrid(0.1, 5)
    assert g.times.shape == (6,)
    assert g.t_end == pytest.approx(0.5)
    for bad in ((0.0, 5), (0.1, 0), (0.1, 2.5)):
        with pytest.raises(ValidationError):
            TimeGrid(*bad)


def test_quadrature_config_validation():
    with pytest.raises(ValidationError):
        QuadratureConfig(gauss_order=1)
    with pytest.raises(ValidationError):
        QuadratureConfig(pv_radius_factor=0.0)


def test_weakly_singular_integral_closed_forms():
    r, t, c = 0.3, 1.0, 2.0
    one = weakly_singular_time_integral(lambda s: np.ones_like(s), r, t, c)
    assert one == pytest.approx(math.acosh(c * t / r) / c, rel=1e-13)
    lin = weakly_singular_time_integral(lambda s: s, r, t, c)
    assert lin == pytest.approx(math.sqrt(c * c * t * t - r * r) / c**2, rel=1e-13)
    assert weakly_singular_time_integral(lambda s: s, 3.0, 1.0, 1.0) == 0.0


def test_weakly_singular_integral_breakpoints():
    f = lambda s: np.where(s > 0.6, 1.0, 0.0)
    val = weakly_singular_time_integral(f, 0.3, 1.0, 1.0, breakpoints=[0.6])
    assert val == pytest.approx(math.acosh(1.0 / 0.3) - math.acosh(0.6 / 0.3), rel=1e-13)


def test_zero_distance_needs_vanishing_integrand():
    with pytest.raises(ValidationError):
        weakly_singular_time_integral(lambda s: np.ones_like(s), 0.0, 1.0, 1.0)
    assert weakly_singular_time_integral(lambda s: s, 0.0, 1.0, 1.0) == pytest.approx(1.0)


def test_reference_rules():
    x, w = segment_rule(6)
    assert w.sum() == pytest.approx(1.0)
    assert np.dot(w, x**5) == pytest.approx(1 / 6)
    pts, wt = triangle_rule(4)
    assert wt.sum() == pytest.approx(1.0)


def test_principal_values_on_closed_curves():
    circle = build_circle((0, 0), 1.0, 128)
    assert pv_boundary_integral(circle, circle.centroids[3], np.ones(128), "inv_r_drdn_2d") == pytest.approx(math.pi)
    sphere = build_sphere((0, 0, 0), 1.0, 2)
    val = pv_boundary_integral(sphere, sphere.centroids[3], np.ones(sphere.n_elements), "d_invr_dn_3d")
    assert val == pytest.approx(-2 * math.pi, rel=1e-9)


def test_principal_value_argument_checks():
    circle = build_circle((0, 0), 1.0, 16)
    with pytest.raises(ValidationError):
        pv_boundary_integral(circle, (0.0, 0.0), np.ones(16), "inv_r_drdn_2d")
    with pytest.raises(ValidationError):
        pv_boundary_integral(circle, circle.centroids[0], np.ones(16), "bogus")


def test_free_space_volume_integrals():
    assert sphere_slice_integral(np.zeros(3), 0.5, 1.0, None) == pytest.approx(2 * math.pi)
    assert disk_volume_integral_2d(np.zeros(2), 0.5, 1.0, None) == pytest.approx(math.pi)
    g = lambda p: np.ones(len(p))
    assert sphere_slice_integral(np.zeros(3), 0.5, 2.0, g) == pytest.approx(4 * math.pi * 0.5)


def test_domain_restricted_integrals():
    sphere = build_sphere((0, 0, 0), 1.0, 2)
    # the slice stays inside the ball
    assert sphere_slice_integral(np.zeros(3), 0.5, 1.0, None, DomainIndicator(sphere)) == pytest.approx(2 * math.pi)
    # sphere far larger than the ball: no surface inside
    assert sphere_slice_integral(np.zeros(3), 5.0, 1.0, None, DomainIndicator(sphere)) == pytest.approx(0.0, abs=1e-12)
    circle = build_circle((0, 0), 1.0, 256)
    val = disk_volume_integral_2d(np.zeros(2), 2.0, 1.0, None, DomainIndicator(circle))
    assert val == pytest.approx(2 * math.pi * (2.0 - math.sqrt(3.0)), rel=2e-3)


def test_retarded_surface_integral_closed_forms():
    a = 0.8
    sphere = build_sphere((0, 0, 0), a, 2)
    one = lambda y, s: np.ones(len(s))
    # centre of the sphere: flat facets sit just inside radius a
    val = retarded_surface_integral_3d(sphere, np.zeros(3), 1.0, 1.0, one)
    assert val == pytest.approx(4 * math.pi * a, rel=0.02)
    # the cone has not reached the surface yet
    assert retarded_surface_integral_3d(sphere, np.zeros(3), 0.7, 1.0, one) == 0.0
    with pytest.raises(ValidationError):
        retarded_surface_integral_3d(sphere, np.zeros(3), 1.0, 1.0, one, weight="r")
