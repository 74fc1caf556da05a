import numpy as np
import pytest

from wavebem.errors import HistoryUnderflowError, ValidationError
from wavebem.geometry import build_circle, build_interval, build_sphere
from wavebem.oracle import DAlembert1D, PlaneWave, Profile, RadialBump, StandingWave1D, poisson_2d_bruteforce
from wavebem.quadrature import TimeGrid
from wavebem.representation import (
    BoundaryTrace,
    EndpointHistory,
    InitialData,
    SourceTerm,
    boundary_u0_term_3d,
    cauchy_2d,
    evaluate_1d,
    evaluate_2d,
    evaluate_3d,
    evaluate_series,
    initial_terms_1d,
)

PW2 = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=2.0), offset=1.05)


@pytest.fixture(scope="module")
def circle_trace():
    mesh = build_circle((0, 0), 1.0, 64)
    grid = TimeGrid(0.025, 160)
    return BoundaryTrace.from_oracle(PW2, mesh, grid)


def test_trace_shape_validation():
    mesh = build_circle((0, 0), 1.0, 8)
    grid = TimeGrid(0.1, 4)
    with pytest.raises(ValidationError):
        BoundaryTrace(mesh, grid, np.zeros((4, 8)), np.zeros((5, 8)), np.zeros((5, 8)))
    z = BoundaryTrace.zeros(mesh, grid)
    assert z.u.shape == (5, 8) and not any(z.known_mask.values())


@pytest.mark.parametrize("x", [(0.0, 0.0), (0.4, -0.3)])
def test_interior_representation_2d(circle_trace, x):
    for t in (1.5, 2.5, 3.3):
        ref = PW2.eval(np.array([x]), t)[0][0]
        val = evaluate_2d(circle_trace, None, None, x, t)
        assert val == pytest.approx(ref, abs=2e-2 * 1.0)


def test_exterior_representation_vanishes(circle_trace):
    for t in (1.5, 2.5):
        assert abs(evaluate_2d(circle_trace, None, None, (1.6, 0.2), t)) < 2e-2


def test_both_2d_forms_agree(circle_trace):
    x = (0.3, 0.1)
    a = evaluate_2d(circle_trace, None, None, x, 2.2, form="first")
    b = evaluate_2d(circle_trace, None, None, x, 2.2, form="second")
    assert a == pytest.approx(b, abs=5e-3)


def test_series_matches_pointwise(circle_trace):
    X = np.array([[0.2, 0.1]])
    steps = np.array([40, 80, 120])
    series = evaluate_series(circle_trace, X, steps=steps)
    assert series.shape == (1, 3)
    for j, k in enumerate(steps):
        t = circle_trace.grid.times[k]
        assert series[0, j] == pytest.approx(PW2.eval(X, t)[0][0], abs=2e-2)


def test_cauchy_2d_matches_bruteforce():
    bump = RadialBump((0.0, 0.0), 0.4, 4)
    init = InitialData(u0=bump, u0_dot=bump)
    for x, t in (((0.1, 0.0), 0.3), ((0.3, 0.2), 0.6)):
        assert cauchy_2d(init, x, t, 1.0) == pytest.approx(poisson_2d_bruteforce((bump, bump), x, t, 1.0), rel=1e-4)


def test_3d_representation_from_exact_trace():
    mesh = build_sphere((0, 0, 0), 1.0, 2)
    grid = TimeGrid(0.05, 60)
    pw = PlaneWave((0.0, 0.0, 1.0), 1.0, Profile("pulse", width=2.5), offset=1.1)
    tr = BoundaryTrace.from_oracle(pw, mesh, grid)
    x = np.array([[0.1, 0.2, 0.0]])
    for t in (1.5, 2.5):
        assert evaluate_3d(tr, None, None, x[0], t) == pytest.approx(pw.eval(x, t)[0][0], abs=5e-2)


def test_boundary_u0_term_switches_off():
    mesh = build_sphere((0, 0, 0), 1.0, 1)
    x = np.array([0.2, 0.1, 0.0])
    u0 = np.ones(mesh.n_elements)
    assert boundary_u0_term_3d(mesh, u0, x, 0.5, 1.0) == 0.0  # sphere not yet reaching the boundary
    assert abs(boundary_u0_term_3d(mesh, u0, x, 1.0, 1.0)) > 1.0  # partially inside
    assert boundary_u0_term_3d(mesh, u0, x, 1.5, 1.0) == 0.0  # past the horizon time


def test_endpoint_history_access():
    grid = TimeGrid(0.1, 10)
    hist = EndpointHistory.from_oracle(StandingWave1D(), 0.0, 1.0, grid)
    assert hist.u_at(0.0, 1) == pytest.approx(0.0, abs=1e-15)
    assert hist.flux_integral(0.0, 0) == 0.0
    with pytest.raises(HistoryUnderflowError):
        hist.u_at(1.5, 0)


def test_initial_terms_1d_is_dalembert():
    hat = DAlembert1D.hat(0.5, 0.1)
    init = InitialData(u0=lambda p: hat.u0(np.asarray(p)[:, 0]))
    # 2 H u with both translates inside the interval
    assert initial_terms_1d(init, 0.0, 1.0, 0.3, 0.2, 1.0) == pytest.approx(2 * hat.eval(np.array([[0.3]]), 0.2)[0][0])


def test_1d_representation_from_exact_history():
    sw = StandingWave1D()
    grid = TimeGrid(1e-3, 1000)
    hist = EndpointHistory.from_oracle(sw, 0.0, 1.0, grid)
    u0 = lambda p: sw.eval(np.asarray(p), 0.0)[0]
    init = InitialData(u0=u0)
    for x, t in ((0.3, 0.4), (0.8, 0.95)):
        assert evaluate_1d(hist, init, x, t, 1.0) == pytest.approx(sw.eval(np.array([[x]]), t)[0][0], abs=1e-5)


def test_source_term_flag():
    assert SourceTerm().is_zero
    assert SourceTerm(G=lambda p, t: 0 * t, active=False).is_zero
    assert not SourceTerm(G=lambda p, t: 0 * t, active=True).is_zero
