import numpy as np
import pytest

from wavebem.bie_solver import (
    BVPKind,
    SolverConfig,
    check_reassembly,
    default_time_step,
    march_dirichlet,
    march_neumann,
    solve_1d_boundary,
)
from wavebem.errors import NumericalError, ValidationError
from wavebem.geometry import build_circle, build_interval, build_sphere
from wavebem.oracle import DAlembert1D, PlaneWave, Profile, StandingWave1D
from wavebem.quadrature import TimeGrid
from wavebem.representation import BoundaryTrace, EndpointHistory, InitialData, lag_operators_2d

PW2 = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=2.0), offset=1.05)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.fixture(scope="module")
def circle_case():
    mesh = build_circle((0, 0), 1.0, 64)
    grid = TimeGrid(0.025, 120)
    return mesh, grid, BoundaryTrace.from_oracle(PW2, mesh, grid)


def test_bvp_kind_validation():
    assert BVPKind("neumann").kind == "neumann"
    with pytest.raises(ValidationError):
        BVPKind("robin")


def test_default_time_step():
    mesh = build_circle((0, 0), 1.0, 64)
    assert default_time_step(mesh, 2.0) == pytest.approx(mesh.h_min / 4.0)


def test_dirichlet_recovers_flux(circle_case):
    mesh, grid, exact = circle_case
    tr = march_dirichlet(mesh, grid, exact.u)
    assert rel_l2(tr.du_dn[1:], exact.du_dn[1:]) < 0.02
    assert len(tr.solver_log) == grid.n_steps
    assert max(r.linf_residual for r in tr.solver_log) < 1e-12
    assert tr.known_mask == {"u": True, "u_dot": True, "du_dn": False}


def test_neumann_recovers_values(circle_case):
    mesh, grid, exact = circle_case
    tr = march_neumann(mesh, grid, exact.du_dn)
    assert rel_l2(tr.u[1:], exact.u[1:]) < 0.02


def test_dirichlet_neumann_round_trip_is_consistent(circle_case):
    mesh, grid, exact = circle_case
    flux = march_dirichlet(mesh, grid, exact.u).du_dn
    back = march_neumann(mesh, grid, flux)
    assert np.abs(back.u - exact.u).max() < 1e-12


def test_callable_data_matches_sampled_values(circle_case):
    mesh, grid, exact = circle_case
    f = lambda p, t: PW2.eval(p, t)[0]
    a = march_dirichlet(mesh, grid, f)
    b = march_dirichlet(mesh, grid, exact.u)
    assert np.allclose(a.du_dn, b.du_dn, atol=1e-12)


def test_smoothing_option_runs(circle_case):
    mesh, grid, exact = circle_case
    tr = march_dirichlet(mesh, grid, exact.u, cfg=SolverConfig(smoothing=True))
    assert np.all(np.isfinite(tr.du_dn))
    assert rel_l2(tr.du_dn[1:], exact.du_dn[1:]) < 0.1


def test_conditioning_guard(circle_case):
    mesh, grid, exact = circle_case
    with pytest.raises(NumericalError):
        march_dirichlet(mesh, grid, exact.u, cfg=SolverConfig(cond_limit=0.5))


def test_reassembly_check_agrees_with_cache():
    mesh = build_circle((0, 0), 1.0, 32)
    grid = TimeGrid(0.1, 10)
    P, D = lag_operators_2d(mesh, mesh.centroids, 1.0, grid.dt, 1)
    assert check_reassembly(mesh, grid, 1.0, 5, P[0]) < 1e-12
    assert check_reassembly(mesh, grid, 1.0, 5, 2 * P[0]) > 0.1


def test_3d_dirichlet_small():
    mesh = build_sphere((0, 0, 0), 1.0, 1)
    grid = TimeGrid(default_time_step(mesh, 1.0), 20)
    pw = PlaneWave((0, 0, 1.0), 1.0, Profile("pulse", width=3.0), offset=1.05)
    exact = BoundaryTrace.from_oracle(pw, mesh, grid)
    tr = march_dirichlet(mesh, grid, exact.u)
    assert np.all(np.isfinite(tr.du_dn))
    assert rel_l2(tr.du_dn[1:], exact.du_dn[1:]) < 0.3


def test_marching_rejects_1d_meshes():
    with pytest.raises(ValidationError):
        march_dirichlet(build_interval(0.0, 1.0), TimeGrid(0.1, 2), np.zeros((3, 2)))


# -- interval ---------------------------------------------------------------
@pytest.fixture(scope="module")
def standing():
    sw = StandingWave1D()
    grid = TimeGrid(1e-3, 1500)
    exact = EndpointHistory.from_oracle(sw, 0.0, 1.0, grid)
    init = InitialData(u0=lambda p: sw.eval(np.asarray(p), 0.0)[0])
    return grid, exact, init


def test_1d_known_values(standing):
    grid, exact, init = standing
    h = solve_1d_boundary(0.0, 1.0, grid, "dirichlet", u_known=(exact.u[:, 0], exact.u[:, 1]), init=init)
    assert np.abs(h.ux - exact.ux).max() < 1e-4


def test_1d_known_slopes(standing):
    grid, exact, init = standing
    h = solve_1d_boundary(0.0, 1.0, grid, "neumann", ux_known=(exact.ux[:, 0], exact.ux[:, 1]), init=init)
    assert np.abs(h.u - exact.u).max() < 1e-5


def test_1d_mixed(standing):
    grid, exact, init = standing
    h = solve_1d_boundary(0.0, 1.0, grid, "mixed-1d", u_known=(exact.u[:, 0], None),
                          ux_known=(None, exact.ux[:, 1]), init=init)
    assert np.abs(h.u - exact.u).max() < 1e-5
    assert np.abs(h.ux[:, 0] - exact.ux[:, 0]).max() < 1e-4


def test_1d_hat_passing_through_ends():
    hat = DAlembert1D.hat(0.5, 0.1)
    grid = TimeGrid(0.002, 400)
    exact = EndpointHistory.from_oracle(hat, 0.0, 1.0, grid)
    init = InitialData(u0=lambda p: hat.u0(np.asarray(p)[:, 0]))
    h = solve_1d_boundary(0.0, 1.0, grid, "dirichlet", u_known=(exact.u[:, 0], exact.u[:, 1]), init=init)
    # slopes are piecewise constant; errors stay confined to the kinks
    bad = np.abs(h.ux - exact.ux) > 1e-8
    assert bad.sum() <= 16


def test_1d_input_checks(standing):
    grid, exact, init = standing
    with pytest.raises(ValidationError):
        solve_1d_boundary(0.0, 1.0, TimeGrid(2.0, 3), "dirichlet", u_known=(np.zeros(4), np.zeros(4)))
    with pytest.raises(ValidationError):
        solve_1d_boundary(0.0, 1.0, grid, "neumann", u_known=(exact.u[:, 0], exact.u[:, 1]))
    with pytest.raises(ValidationError):
        solve_1d_boundary(0.0, 1.0, grid, "dirichlet", u_known=(exact.u[:, 0], None))
    with pytest.raises(ValidationError):
        solve_1d_boundary(1.0, 0.0, grid, "dirichlet", u_known=(exact.u[:, 0], exact.u[:, 1]))
