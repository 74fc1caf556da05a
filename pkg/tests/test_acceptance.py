"""Acceptance suite: one PASS/FAIL line per criterion at its stated tolerance.

The lines are printed as the tests run and repeated in the terminal summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from wavebem.bie_solver import default_time_step, march_dirichlet, march_neumann, solve_1d_boundary
from wavebem.cli import solve_scenario, verify_energy, verify_hadamard, verify_symmetry
from wavebem.geometry import build_circle, build_sphere, horizon_time
from wavebem.oracle import (
    PlaneWave,
    Profile,
    RadialBump,
    SphericalPulse3D,
    StandingWave1D,
    poisson_2d_bruteforce,
)
from wavebem.quadrature import TimeGrid
from wavebem.representation import (
    BoundaryTrace,
    EndpointHistory,
    InitialData,
    boundary_u0_term_3d,
    evaluate_1d,
    evaluate_2d,
    evaluate_3d,
    evaluate_series,
)
from wavebem.scenario import load_scenario
from wavebem.verification import gauss_residual_2d, static_gauss_3d


def report(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def rel_l2(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


# ---------------------------------------------------------------------------
def test_criterion_01_dynamic_gauss_2d():
    mesh = build_circle((0.0, 0.0), 1.0, 256)
    groups = {
        "interior": [(0.0, 0.0), (0.5, 0.2), (-0.3, -0.6)],
        "boundary": [tuple(mesh.centroids[i]) for i in (0, 100, 200)],
        "exterior": [(1.3, 0.4), (-1.7, 0.5), (1.1, -0.9)],
    }
    t0 = time.perf_counter()
    worst = {}
    ok = True
    for g, pts in groups.items():
        tol = (3e-2 if g == "boundary" else 1e-2) * 2.0 * math.pi
        res = [abs(gauss_residual_2d(mesh, p, t)) for p in pts for t in (0.5, 1.5, 3.0)]
        worst[g] = max(res)
        ok &= worst[g] <= tol
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10.0
    detail = ", ".join(f"{g} max|res|={v:.2e}" for g, v in worst.items()) + f", runtime {elapsed:.1f}s"
    report(1, "dynamic Gauss identity 2-D", ok, detail + " (tol 2pi*1e-2, boundary 2pi*3e-2, < 10 s)")


def test_criterion_02_static_gauss_3d():
    mesh = build_sphere((0.0, 0.0, 0.0), 1.0, 3)
    cases = [((0.1, 0.2, 0.3), 4 * math.pi), ((-0.4, 0.1, 0.0), 4 * math.pi), ((0.0, 0.0, -0.5), 4 * math.pi),
             (tuple(mesh.centroids[5]), 2 * math.pi), (tuple(mesh.centroids[300]), 2 * math.pi),
             (tuple(mesh.centroids[1000]), 2 * math.pi),
             ((1.6, 0.2, 0.0), 0.0), ((0.0, -1.5, 1.0), 0.0), ((1.0, 1.0, 1.0), 0.0)]
    ok = True
    worst_rel, worst_abs = 0.0, 0.0
    for x, target in cases:
        val = static_gauss_3d(mesh, x)
        if target:
            worst_rel = max(worst_rel, abs(val - target) / target)
            ok &= abs(val - target) <= 0.01 * target
        else:
            worst_abs = max(worst_abs, abs(val))
            ok &= abs(val) <= 0.05
    report(2, "static Gauss formula 3-D", ok,
           f"max rel err (4pi, 2pi) {worst_rel:.2e} (tol 1e-2), exterior max |value| {worst_abs:.2e} (tol 0.05)")


def test_criterion_03_one_dimensional_exactness(scenario_dir):
    sc = load_scenario(scenario_dir / "standing_wave_interval.toml")
    out = solve_scenario(sc)
    grid = out.grid
    assert grid.dt == 1e-3 and grid.t_end == pytest.approx(2.0)
    sw = StandingWave1D()
    exact = EndpointHistory.from_oracle(sw, 0.0, 1.0, grid)
    endpoint_err = float(np.abs(out.trace.u - exact.u).max())
    # Dirichlet ends: recover the fluxes too
    hist = solve_1d_boundary(0.0, 1.0, grid, "dirichlet", u_known=(exact.u[:, 0], exact.u[:, 1]),
                             init=sc.build_initial())
    endpoint_err = max(endpoint_err, float(np.abs(hist.u - exact.u).max()))
    xs = np.linspace(0.0, 1.0, 13)[1:-1]
    assert len(xs) == 11
    times = grid.times[::20]
    init = sc.build_initial()
    field_err = 0.0
    for x in xs:
        vals = np.array([evaluate_1d(out.trace, init, x, t, 1.0) for t in times])
        ref = sw.eval(np.full((len(times), 1), x), times)[0]
        field_err = max(field_err, float(np.abs(vals - ref).max()))
    ok = field_err <= 1e-4 and endpoint_err <= 1e-4
    report(3, "1-D exactness (standing wave)", ok,
           f"field max err {field_err:.2e} at 11 points, endpoint max err {endpoint_err:.2e} (tol 1e-4)")


def test_criterion_04_cauchy_2d():
    mesh = build_circle((0.0, 0.0), 1.0, 64)
    grid = TimeGrid(0.025, 40)
    bump = RadialBump((0.1, -0.05), 0.3, 4)
    init = InitialData(u0=None, u0_dot=bump)
    zero = BoundaryTrace.zeros(mesh, grid)
    worst = 0.0
    for x in ((0.0, 0.0), (0.2, 0.1), (-0.1, 0.2)):
        for t in (0.2, 0.35, 0.5):
            # the retarded disk stays inside the circle (no boundary influence)
            assert np.linalg.norm(x) + t < 1.0
            ref = poisson_2d_bruteforce((None, bump), x, t, 1.0)
            val = evaluate_2d(zero, init, None, x, t, c=1.0)
            worst = max(worst, abs(val - ref) / abs(ref))
    report(4, "2-D Cauchy problem vs brute-force Poisson", worst <= 1e-3, f"max rel err {worst:.2e} (tol 1e-3)")


def test_criterion_05_cauchy_3d():
    mesh = build_sphere((0.0, 0.0, 0.0), 1.0, 2)
    grid = TimeGrid(0.05, 20)
    bump = RadialBump((0.1, 0.0, 0.0), 0.3, 4)
    pulse = SphericalPulse3D(velocity=bump, displacement=bump, c=1.0)
    u0, v0 = pulse.initial_data()
    init = InitialData(u0=u0, u0_dot=v0)
    zero = BoundaryTrace.zeros(mesh, grid)
    times = (0.1, 0.25, 0.4)
    worst = 0.0
    for x in ((0.1, 0.1, 0.0), (0.2, 0.0, 0.1), (0.0, 0.2, 0.0)):
        ref = np.array([pulse.eval(np.array([x]), t)[0][0] for t in times])
        val = np.array([evaluate_3d(zero, init, None, x, t, c=1.0) for t in times])
        worst = max(worst, float(np.abs(val - ref).max() / np.abs(ref).max()))
    # boundary u0 term after the horizon time, with nonzero boundary data
    u0_elem = 1.0 + np.cos(mesh.centroids[:, 0])
    late = 0.0
    for x in ((0.2, 0.1, 0.0), (0.0, 0.0, 0.0), (-0.3, 0.4, 0.2)):
        ts = horizon_time(mesh, x, 1.0)
        late = max(late, max(abs(boundary_u0_term_3d(mesh, u0_elem, x, ts + d, 1.0)) for d in (0.01, 0.5, 2.0)))
    ok = worst <= 1e-3 and late < 1e-10
    report(5, "3-D Cauchy problem (Kirchhoff terms)", ok,
           f"max rel err {worst:.2e} (tol 1e-3), boundary u0 term after t* {late:.1e} (tol 1e-10)")


# ---------------------------------------------------------------------------
@pytest.fixture(scope="module")
def mot_runs(scenario_dir):
    """Dirichlet and Neumann solves of the plane-wave scenarios."""
    runs = {}
    for shape in ("circle", "sphere"):
        for bvp in ("dirichlet", "neumann"):
            sc = load_scenario(scenario_dir / f"plane_wave_{shape}_{bvp}.toml")
            runs[shape, bvp] = (sc, solve_scenario(sc))
    return runs


def _interior_error(sc, out) -> float:
    idx = np.arange(0, out.grid.n_steps + 1, sc.field_every)
    vals = evaluate_series(out.trace, sc.probes, sc.c, sc.quad, steps=idx)
    oracle = sc.build_oracle()
    ref = np.array([[oracle.eval(p[None], out.grid.times[k])[0][0] for k in idx] for p in sc.probes])
    return max(rel_l2(v, r) for v, r in zip(vals, ref))


def test_criterion_06_mot_dirichlet(mot_runs):
    parts, ok = [], True
    for shape, n_el, n_steps in (("circle", 64, 200), ("sphere", 320, 100)):
        sc, out = mot_runs[shape, "dirichlet"]
        assert out.mesh.n_elements == n_el and out.grid.n_steps == n_steps
        assert len(sc.probes) == 5
        flux = rel_l2(out.trace.du_dn[1:], out.exact.du_dn[1:])
        field = _interior_error(sc, out)
        ok &= flux <= 0.05 and field <= 0.05
        parts.append(f"{shape}: flux {flux:.2e}, interior {field:.2e}")
    report(6, "MOT Dirichlet round trip", ok, "; ".join(parts) + " (tol 5e-2)")


def test_criterion_07_mot_neumann(mot_runs):
    parts, ok = [], True
    for shape in ("circle", "sphere"):
        sc, out = mot_runs[shape, "neumann"]
        u_err = rel_l2(out.trace.u[1:], out.exact.u[1:])
        # feed the Dirichlet-recovered flux back into a Neumann solve
        _, dres = mot_runs[shape, "dirichlet"]
        back = march_neumann(dres.mesh, dres.grid, dres.trace.du_dn)
        rt = rel_l2(back.u[1:], dres.exact.u[1:])
        ok &= u_err <= 0.05 and rt <= 0.07
        parts.append(f"{shape}: u {u_err:.2e} (tol 5e-2), D->N {rt:.2e} (tol 7e-2)")
    report(7, "MOT Neumann", ok, "; ".join(parts))


def test_criterion_08_hadamard():
    checks = verify_hadamard("all")
    exact = [c for c in checks if c.mode == "max"]
    wrong = [c for c in checks if c.mode == "min"]
    worst = max(abs(c.residual) for c in exact)
    margin = min(c.residual for c in wrong)
    ok = all(c.passed for c in checks) and bool(wrong)
    report(8, "Hadamard jump suite", ok,
           f"{len(exact)} jump residuals max {worst:.1e} (tol 1e-6), wrong-speed compatibility {margin:.2f} (>= 0.1c)")


def test_criterion_09_energy_balance():
    checks = verify_energy("all", threads=1)
    en = max(abs(c.residual) for c in checks if "energy" in c.label)
    lg = max(abs(c.residual) for c in checks if "lagrangian" in c.label)
    ok = all(c.passed for c in checks)
    report(9, "energy and Lagrangian balance", ok, f"energy max {en:.2e} (tol 2e-2), Lagrangian max {lg:.2e} (tol 3e-2)")


def test_criterion_10_structural_properties():
    mesh = build_circle((0.0, 0.0), 1.0, 48)
    grid = TimeGrid(default_time_step(mesh, 1.0), 120)
    cut = 60
    p1 = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=1.5), offset=1.05)
    p2 = PlaneWave((0.6, 0.8), 1.0, Profile("pulse", width=1.0), offset=1.1)
    d1 = BoundaryTrace.from_oracle(p1, mesh, grid).u
    d2 = BoundaryTrace.from_oracle(p2, mesh, grid).u
    probes = np.array([[0.1, 0.2], [-0.4, 0.3]])

    # causality: late perturbation leaves earlier output bit-identical
    pert = d1.copy()
    pert[cut + 1:] += np.random.default_rng(7).normal(size=pert[cut + 1:].shape)
    a, b = march_dirichlet(mesh, grid, d1), march_dirichlet(mesh, grid, pert)
    fa, fb = evaluate_series(a, probes), evaluate_series(b, probes)
    causal = (np.array_equal(a.du_dn[:cut + 1], b.du_dn[:cut + 1])
              and np.array_equal(fa[:, :cut + 1], fb[:, :cut + 1])
              and not np.array_equal(a.du_dn, b.du_dn))

    # superposition
    al, be = 0.7, -1.3
    s1, s2 = march_dirichlet(mesh, grid, d1), march_dirichlet(mesh, grid, d2)
    sc = march_dirichlet(mesh, grid, al * d1 + be * d2)
    comb = al * s1.du_dn + be * s2.du_dn
    sup_trace = float(np.abs(sc.du_dn - comb).max() / np.abs(comb).max())
    f_comb = al * evaluate_series(s1, probes) + be * evaluate_series(s2, probes)
    sup_field = float(np.abs(evaluate_series(sc, probes) - f_comb).max() / np.abs(f_comb).max())
    sup = max(sup_trace, sup_field)

    # kernel reciprocity
    sym = verify_symmetry(1000)
    sym_worst = max(c.value for c in sym)

    ok = causal and sup <= 1e-12 and sym_worst == 0.0
    report(10, "structural properties", ok,
           f"causality bit-identical={causal}, superposition rel {sup:.1e} (tol 1e-12), "
           f"kernel symmetry max {sym_worst:.1e} over 1000 samples per dim (exact)")
