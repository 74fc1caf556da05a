"""Command-line front end.

Subcommands
-----------
``solve``           march a scenario and write the boundary trace
``evaluate``        solve, then evaluate the field at the scenario probes
``oracle-compare``  evaluate the representation from exact boundary data
``verify``          identity checks: ``gauss``, ``hadamard``, ``energy``,
                    ``symmetry``
``mesh``            ``gen`` and ``info``

Exit codes: 0 success, 1 unexpected error, 2 invalid input, 3 numerical
failure, 4 verification tolerance exceeded.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bie_solver import march_dirichlet, march_neumann, solve_1d_boundary
from .errors import NumericalError, ToleranceExceeded, ValidationError, WaveBEMError
from .geometry import BoundaryMesh, DomainIndicator, build_circle, build_interval, build_sphere, load_mesh, save_mesh
from .kernels import WaveKernel, check_symmetry
from .oracle import PlaneWave, Profile, StandingWave1D
from .quadrature import TimeGrid
from .representation import BoundaryTrace, EndpointHistory, evaluate_1d, evaluate_series
from .scenario import TRACE_CSV_HEADER, Scenario, load_scenario, read_trace_csv
from .verification import (
    FrontGeometry,
    energy_balance_residual,
    front_energy_jump_check,
    gauss_residual_2d,
    gauss_residual_3d,
    hadamard_jump_check,
    lagrangian_balance_residual,
    static_gauss_3d,
)

logger = logging.getLogger("wavebem")

CSV_VERSION = 1
FIELD_CSV_HEADER = f"# wavebem field v{CSV_VERSION}"
RESIDUAL_CSV_HEADER = f"# wavebem residual-log v{CSV_VERSION}"
VERIFY_CSV_HEADER = f"# wavebem verify v{CSV_VERSION}"

#: Formula-level functions and the subcommand that exercises each of them.
FORMULA_COVERAGE = {
    "kernels.eval_U": "verify symmetry",
    "kernels.eval_W": "verify symmetry",
    "kernels.eval_H_kernel": "verify symmetry",
    "kernels.check_symmetry": "verify symmetry",
    "element_integrals.segment_time_integrals": "solve",
    "element_integrals.segment_B": "verify gauss",
    "element_integrals.triangle_moments": "solve",
    "quadrature.disk_volume_integral_2d": "verify gauss",
    "quadrature.sphere_slice_integral": "verify gauss",
    "representation.lag_operators_2d": "solve",
    "representation.lag_operators_3d": "solve",
    "representation.evaluate_series": "evaluate",
    "representation.evaluate_1d": "evaluate",
    "representation.initial_terms_1d": "evaluate",
    "representation.volume_terms": "oracle-compare",
    "representation.boundary_u0_term_3d": "oracle-compare",
    "bie_solver.march_dirichlet": "solve",
    "bie_solver.march_neumann": "solve",
    "bie_solver.solve_1d_boundary": "solve",
    "verification.gauss_residual_2d": "verify gauss",
    "verification.gauss_residual_3d": "verify gauss",
    "verification.static_gauss_3d": "verify gauss",
    "verification.hadamard_jump_check": "verify hadamard",
    "verification.front_energy_jump_check": "verify hadamard",
    "verification.energy_balance_residual": "verify energy",
    "verification.lagrangian_balance_residual": "verify energy",
}


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------
def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: str, columns: Sequence[str], rows) -> Path:
    """Write a versioned CSV with full-precision floats and ``\\n`` line ends."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def _versions() -> dict:
    import matplotlib
    import scipy

    return {"wavebem": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "matplotlib": matplotlib.__version__}


def write_manifest(out: Path, command: str, scenario: Scenario | None, artifacts: list[Path],
                   timings: dict, summary: dict) -> Path:
    path = Path(out).with_suffix(".manifest.json")
    doc = {
        "command": command,
        "scenario": None if scenario is None else {"name": scenario.name, "sha256": scenario.digest},
        "versions": _versions(),
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "artifacts": [str(p) for p in artifacts],
        "summary": summary,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    den = float(np.linalg.norm(b))
    return float(np.linalg.norm(a - b)) / den if den > 0 else float(np.linalg.norm(a - b))


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map; results do not depend on the number of threads."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------
@dataclass
class SolveOutcome:
    mesh: BoundaryMesh
    grid: TimeGrid
    trace: BoundaryTrace | EndpointHistory
    exact: BoundaryTrace | EndpointHistory | None
    unknown: str
    summary: dict


def _solve_1d(sc: Scenario, mesh: BoundaryMesh, grid: TimeGrid) -> SolveOutcome:
    a1, a2 = float(mesh.nodes[:, 0].min()), float(mesh.nodes[:, 0].max())
    known = sc.known_ends()
    oracle = sc.build_oracle()
    init = sc.build_initial()
    path = sc.trace_file()
    if path is not None:
        tab = read_trace_csv(path, grid.n_steps, 2)
        u_hist = tab["u"]
        ux_hist = np.column_stack([-tab["du_dn"][:, 0], tab["du_dn"][:, 1]])
        exact = None
    else:
        exact = EndpointHistory.from_oracle(oracle, a1, a2, grid)
        u_hist, ux_hist = exact.u, exact.ux
    u_known = tuple(u_hist[:, e] if known[e] == "u" else None for e in (0, 1))
    ux_known = tuple(ux_hist[:, e] if known[e] == "ux" else None for e in (0, 1))
    hist = solve_1d_boundary(a1, a2, grid, sc.bvp, u_known, ux_known, init, sc.c)
    summary = {}
    if exact is not None:
        summary["max_abs_error_u"] = float(np.abs(hist.u - exact.u).max())
        summary["rel_l2_error_ux"] = _rel_l2(hist.ux, exact.ux)
    return SolveOutcome(mesh, grid, hist, exact, "u" if "ux" in known else "ux", summary)


def solve_scenario(sc: Scenario) -> SolveOutcome:
    mesh = sc.build_mesh()
    grid = sc.build_grid()
    if sc.dim == 1:
        return _solve_1d(sc, mesh, grid)
    oracle = sc.build_oracle()
    init, src = sc.build_initial(), sc.build_source()
    path = sc.trace_file()
    if path is not None:
        tab = read_trace_csv(path, grid.n_steps, mesh.n_elements)
        exact = None
        data = tab["u"] if sc.bvp == "dirichlet" else tab["du_dn"]
    else:
        exact = BoundaryTrace.from_oracle(oracle, mesh, grid)
        data = exact.u if sc.bvp == "dirichlet" else exact.du_dn
    if sc.bvp == "dirichlet":
        trace = march_dirichlet(mesh, grid, data, init, src, sc.solver)
        unknown = "du_dn"
    else:
        trace = march_neumann(mesh, grid, data, init, src, sc.solver)
        unknown = "u"
    summary = {"n_elements": mesh.n_elements, "n_steps": grid.n_steps, "dt": grid.dt,
               "cond_estimate": trace.solver_log[0].cond_estimate if trace.solver_log else None,
               "max_step_residual": max((r.linf_residual for r in trace.solver_log), default=0.0)}
    if exact is not None and src.is_zero:
        rec, ref = getattr(trace, unknown)[1:], getattr(exact, unknown)[1:]
        summary[f"rel_l2_error_{unknown}"] = _rel_l2(rec, ref)
    return SolveOutcome(mesh, grid, trace, exact, unknown, summary)


def _trace_rows(out: SolveOutcome):
    t = out.grid.times
    tr = out.trace
    if isinstance(tr, EndpointHistory):
        u = tr.u
        u_dot = np.vstack([np.zeros((1, 2)), np.diff(u, axis=0) / out.grid.dt])
        dn = np.column_stack([-tr.ux[:, 0], tr.ux[:, 1]])
    else:
        u, u_dot, dn = tr.u, tr.u_dot, tr.du_dn
    for k in range(len(t)):
        for e in range(u.shape[1]):
            yield (k, t[k], e, u[k, e], u_dot[k, e], dn[k, e])


def _exact_arrays(out: SolveOutcome, name: str):
    if out.exact is None:
        return None
    if isinstance(out.exact, EndpointHistory):
        return out.exact.u if name == "u" else out.exact.ux
    return getattr(out.exact, name)


def _load_scenario(args) -> Scenario:
    """Load the scenario and apply command-line quadrature overrides."""
    sc = load_scenario(args.scenario)
    over = {k: getattr(args, k) for k in ("gauss_order", "sing_order", "pv_radius_factor")
            if getattr(args, k, None) is not None}
    if not over:
        return sc
    quad = dataclasses.replace(sc.quad, **over)
    # overrides change the results, so they are folded into the digest
    tag = json.dumps(over, sort_keys=True).encode()
    digest = hashlib.sha256(sc.digest.encode() + tag).hexdigest()
    logger.info("quadrature overrides %s", over)
    return dataclasses.replace(sc, quad=quad, solver=dataclasses.replace(sc.solver, quad=quad),
                               digest=digest, _cache={})


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    sc = _load_scenario(args)
    t1 = time.perf_counter()
    out = solve_scenario(sc)
    t2 = time.perf_counter()
    trace_path = Path(args.out)
    artifacts = [write_csv(trace_path, TRACE_CSV_HEADER, ["step", "time", "element", "u", "u_dot", "du_dn"],
                           _trace_rows(out))]
    if isinstance(out.trace, BoundaryTrace):
        log_path = Path(args.residual_log) if args.residual_log else trace_path.with_name(trace_path.stem + "_residuals.csv")
        artifacts.append(write_csv(log_path, RESIDUAL_CSV_HEADER, ["step", "time", "linf_residual", "cond_estimate"],
                                   ((r.step, r.time, r.linf_residual, r.cond_estimate) for r in out.trace.solver_log)))
    if args.plot:
        from . import plotting

        name = out.unknown
        rec = out.trace.ux if name == "ux" else getattr(out.trace, name)
        artifacts.append(plotting.plot_trace(trace_path, out.grid.times, rec, _exact_arrays(out, name), name))
        if isinstance(out.trace, BoundaryTrace):
            log = out.trace.solver_log
            artifacts.append(plotting.plot_residual_log(artifacts[1], np.array([r.step for r in log]),
                                                        np.array([r.linf_residual for r in log])))
    timings = {"parse": t1 - t0, "solve": t2 - t1, "write": time.perf_counter() - t2}
    write_manifest(trace_path, "solve", sc, artifacts, timings, out.summary)
    _print_summary(out.summary)
    return 0


def _print_summary(summary: dict) -> None:
    for k in sorted(summary):
        v = summary[k]
        print(f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}")


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------
def _field_table(sc: Scenario, trace, grid: TimeGrid, threads: int):
    probes = sc.probes
    if len(probes) == 0:
        raise ValidationError("scenario [output].probes is empty; nothing to evaluate")
    idx = np.arange(0, grid.n_steps + 1, sc.field_every)
    times = grid.times[idx]
    init = sc.build_initial()
    if sc.dim == 1:
        def one(x):
            return np.array([evaluate_1d(trace, init, x[0], t, sc.c) for t in times])
    else:
        src = sc.build_source()

        def one(x):
            return evaluate_series(trace, x[None], sc.c, sc.quad, init, src, steps=idx)[0]

    values = np.array(_pmap(one, list(probes), threads))
    oracle = sc.build_oracle()
    exact = None
    if oracle is not None and sc.build_source().is_zero:
        exact = np.array([[float(np.ravel(oracle.eval(x[None], t)[0])[0]) for t in times] for x in probes])
    return times, values, exact


def _write_field(path: Path, sc: Scenario, times, values, exact, plot: bool) -> tuple[list[Path], dict]:
    cols = ["probe"] + [f"x{i}" for i in range(sc.dim)] + ["time", "value", "exact", "error"]

    def rows():
        for p, x in enumerate(sc.probes):
            for j, t in enumerate(times):
                ex = exact[p, j] if exact is not None else float("nan")
                yield (p, *x, t, values[p, j], ex, values[p, j] - ex)

    artifacts = [write_csv(path, FIELD_CSV_HEADER, cols, rows())]
    summary = {}
    if exact is not None:
        # probes sitting on a nodal line have a vanishing exact norm, so every
        # probe error is measured against the largest probe norm
        scale = float(np.linalg.norm(exact, axis=1).max())
        per = np.linalg.norm(values - exact, axis=1) / (scale if scale > 0 else 1.0)
        summary["max_rel_l2_error_over_probes"] = float(per.max())
        summary["max_abs_error"] = float(np.abs(values - exact).max())
    if plot:
        from . import plotting

        artifacts.append(plotting.plot_field(path, times, values, exact))
    return artifacts, summary


def _check_tol(summary: dict, key: str, tol: float | None) -> int:
    if tol is None or key not in summary:
        return 0
    if summary[key] > tol:
        raise ToleranceExceeded(f"{key} = {summary[key]:.3e} exceeds tolerance {tol:.3e}")
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    sc = _load_scenario(args)
    out = solve_scenario(sc)
    t1 = time.perf_counter()
    times, values, exact = _field_table(sc, out.trace, out.grid, args.threads)
    t2 = time.perf_counter()
    artifacts, summary = _write_field(Path(args.out), sc, times, values, exact, args.plot)
    summary.update({f"solve_{k}": v for k, v in out.summary.items()})
    write_manifest(Path(args.out), "evaluate", sc, artifacts, {"solve": t1 - t0, "evaluate": t2 - t1}, summary)
    _print_summary(summary)
    return _check_tol(summary, "max_rel_l2_error_over_probes", args.tol)


def cmd_oracle_compare(args) -> int:
    t0 = time.perf_counter()
    sc = _load_scenario(args)
    oracle = sc.build_oracle()
    if oracle is None:
        raise ValidationError("oracle-compare needs an oracle in [data]")
    mesh, grid = sc.build_mesh(), sc.build_grid()
    if sc.dim == 1:
        a1, a2 = float(mesh.nodes[:, 0].min()), float(mesh.nodes[:, 0].max())
        trace = EndpointHistory.from_oracle(oracle, a1, a2, grid)
    else:
        trace = BoundaryTrace.from_oracle(oracle, mesh, grid)
    times, values, exact = _field_table(sc, trace, grid, args.threads)
    artifacts, summary = _write_field(Path(args.out), sc, times, values, exact, args.plot)
    write_manifest(Path(args.out), "oracle-compare", sc, artifacts, {"total": time.perf_counter() - t0}, summary)
    _print_summary(summary)
    return _check_tol(summary, "max_rel_l2_error_over_probes", args.tol)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Check:
    label: str
    point: tuple
    t: float
    target: float
    value: float
    tolerance: float
    mode: str = "max"  # "max": |value - target| <= tol ; "min": value - target >= tol

    @property
    def residual(self) -> float:
        return self.value - self.target

    @property
    def passed(self) -> bool:
        if self.mode == "min":
            return bool(self.residual >= self.tolerance)
        return bool(abs(self.residual) <= self.tolerance)


def _gauss_2d_cases(preset: str):
    mesh = build_circle((0.0, 0.0), 1.0, 256)
    groups = {
        "interior": [(0.0, 0.0), (0.5, 0.2), (-0.3, -0.6)],
        "boundary": [tuple(mesh.centroids[i]) for i in (0, 100, 200)],
        "exterior": [(1.3, 0.4), (-1.7, 0.5), (1.1, -0.9)],
    }
    return mesh, groups, (0.5, 1.5, 3.0)


def _gauss_3d_cases(preset: str):
    mesh = build_sphere((0.0, 0.0, 0.0), 1.0, 3)
    groups = {
        "interior": [(0.1, 0.2, 0.3), (-0.4, 0.1, 0.0), (0.0, 0.0, -0.5)],
        "boundary": [tuple(mesh.centroids[i]) for i in (5, 300, 1000)],
        "exterior": [(1.6, 0.2, 0.0), (0.0, -1.5, 1.0), (1.0, 1.0, 1.0)],
    }
    return mesh, groups, (0.5, 1.5, 3.0)


def _read_points(path: Path, dim: int) -> list[tuple]:
    pts = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = [p for p in s.replace(",", " ").split()]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            if not pts and i == 1:
                continue  # header
            raise ValidationError(f"{path}:{i}: expected {dim} numbers")
        if len(vals) != dim:
            raise ValidationError(f"{path}:{i}: expected {dim} numbers, got {len(vals)}")
        pts.append(tuple(vals))
    if not pts:
        raise ValidationError(f"{path}: no points")
    return pts


def verify_gauss(dim: int, preset: str, mesh_path: str | None, points_path: str | None,
                 times: list[float] | None, threads: int) -> list[Check]:
    if dim not in (2, 3):
        raise ValidationError("verify gauss supports --dim 2 or 3")
    mesh, groups, default_times = (_gauss_2d_cases if dim == 2 else _gauss_3d_cases)(preset)
    if mesh_path:
        mesh = load_mesh(mesh_path)
        if mesh.dim != dim:
            raise ValidationError(f"mesh {mesh_path} has dimension {mesh.dim}, expected {dim}")
    kind = preset.split("-")[-1] if preset else "all"
    if kind not in ("interior", "boundary", "exterior", "all"):
        raise ValidationError(f"unknown preset {preset!r}")
    if points_path:
        ind = DomainIndicator(mesh)
        pts = _read_points(Path(points_path), dim)
        groups = {"interior": [], "boundary": [], "exterior": []}
        for p in pts:
            h = ind(p)
            groups["interior" if h == 1.0 else "boundary" if h == 0.5 else "exterior"].append(p)
    elif kind != "all":
        groups = {kind: groups[kind]}
    times = list(times or default_times)
    full = 2.0 * math.pi if dim == 2 else 4.0 * math.pi
    tasks = []
    for g, pts in groups.items():
        for p in pts:
            for t in times:
                tasks.append(("dynamic", g, p, t))
            if dim == 3:
                tasks.append(("static", g, p, float("nan")))

    def run(task):
        mode, g, p, t = task
        target = full * {"interior": 1.0, "boundary": 0.5, "exterior": 0.0}[g]
        if mode == "static":
            val = static_gauss_3d(mesh, p)
            tol = 0.05 if g == "exterior" else 0.01 * target
            return Check(f"static-{g}", p, t, target, val, tol)
        if dim == 2:
            res = gauss_residual_2d(mesh, p, t)
        else:
            res = gauss_residual_3d(mesh, p, t, static=False)
        tol = (3e-2 if g == "boundary" else 1e-2) * full
        return Check(f"dynamic-{g}", p, t, target, target + res, tol)

    return _pmap(run, tasks, threads)


def _step_wave(speed: float):
    def f(p, t):
        s = speed * t - p[:, 0]
        on = (s > 0).astype(float)
        return np.maximum(s, 0.0), speed * on, -on[:, None]

    return f


def _radial_front_field(c: float):
    def f(p, t):
        r = np.linalg.norm(p, axis=1)
        s = c * t - r
        on = s > 0
        u = np.where(on, s, 0.0) / r
        ut = np.where(on, c, 0.0) / r
        ur = np.where(on, -1.0 / r - s / r**2, 0.0)
        return u, ut, ur[:, None] * p / r[:, None]

    return f


def verify_hadamard(preset: str) -> list[Check]:
    presets = ("step-1d", "radial-3d", "wrong-speed", "all")
    if preset not in presets:
        raise ValidationError(f"unknown hadamard preset {preset!r}; choose from {presets}")
    c = 1.0
    tol = 1e-6
    checks = []
    if preset in ("step-1d", "all"):
        front = FrontGeometry(lambda t: np.array([[c * t]]), lambda p, t: np.ones_like(p), c)
        for t in (0.3, 0.7, 1.5):
            h = hadamard_jump_check(_step_wave(c), front, t)
            e = front_energy_jump_check(_step_wave(c), front, t)
            if h.inconclusive or e.inconclusive:
                raise NumericalError("step-1d front not resolved at the sampling offset")
            p = (c * t,)
            checks += [Check("step-1d value jump", p, t, 0.0, h.value, tol),
                       Check("step-1d compatibility", p, t, 0.0, h.compat, tol),
                       Check("step-1d tangential", p, t, 0.0, h.tangential, tol),
                       Check("step-1d energy jump", p, t, 0.0, e.energy, tol),
                       Check("step-1d lagrangian jump", p, t, 0.0, e.lagrangian, tol)]
    if preset in ("radial-3d", "all"):
        dirs = np.random.default_rng(12345).normal(size=(32, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        for t in (0.5, 1.3):
            front = FrontGeometry(lambda tt: c * tt * dirs, lambda p, tt: p / np.linalg.norm(p, axis=1)[:, None], c)
            h = hadamard_jump_check(_radial_front_field(c), front, t, quiescent_ahead=True)
            e = front_energy_jump_check(_radial_front_field(c), front, t)
            if h.inconclusive or e.inconclusive:
                raise NumericalError("radial front not resolved at the sampling offset")
            p = (c * t, 0.0, 0.0)
            checks += [Check("radial-3d value jump", p, t, 0.0, h.value, tol),
                       Check("radial-3d compatibility", p, t, 0.0, h.compat, tol),
                       Check("radial-3d tangential", p, t, 0.0, h.tangential, tol),
                       Check("radial-3d quiescent-ahead", p, t, 0.0, h.quiescent, tol),
                       Check("radial-3d energy jump", p, t, 0.0, e.energy, tol),
                       Check("radial-3d lagrangian jump", p, t, 0.0, e.lagrangian, tol),
                       Check("radial-3d continuity of L", p, t, 0.0, e.lagrangian_jump, tol)]
    if preset in ("wrong-speed", "all"):
        wrong = 1.2 * c
        front = FrontGeometry(lambda t: np.array([[wrong * t]]), lambda p, t: np.ones_like(p), c)
        h = hadamard_jump_check(_step_wave(wrong), front, 0.7)
        # a front moving at the wrong speed must be flagged by a clear margin
        checks.append(Check("wrong-speed compatibility detected", (wrong * 0.7,), 0.7, 0.0, h.compat, 0.1 * c, "min"))
    return checks


def verify_energy(preset: str, threads: int) -> list[Check]:
    presets = ("standing-wave", "plane-wave", "plane-wave-solver", "all")
    if preset not in presets:
        raise ValidationError(f"unknown energy preset {preset!r}; choose from {presets}")
    checks = []
    if preset in ("standing-wave", "all"):
        iv = build_interval(0.0, 1.0)
        sw = StandingWave1D()
        for t in (0.7, 2.0):
            checks.append(Check("standing-wave energy", (), t, 0.0, energy_balance_residual(sw.eval, iv, t), 0.02))
            checks.append(Check("standing-wave lagrangian", (), t, 0.0,
                                lagrangian_balance_residual(sw.eval, iv, t), 0.03))
    if preset in ("plane-wave", "plane-wave-solver", "all"):
        pw = PlaneWave((1.0, 0.0), 1.0, Profile("pulse", width=2.0), offset=1.05)
        circle = build_circle((0.0, 0.0), 1.0, 64)
        if preset in ("plane-wave", "all"):
            for t in (1.0, 2.0, 3.0):
                checks.append(Check("plane-wave energy", (), t, 0.0, energy_balance_residual(pw.eval, circle, t), 0.02))
                checks.append(Check("plane-wave lagrangian", (), t, 0.0,
                                    lagrangian_balance_residual(pw.eval, circle, t), 0.03))
        if preset in ("plane-wave-solver", "all"):
            grid = TimeGrid(0.025, 160)
            exact = BoundaryTrace.from_oracle(pw, circle, grid)
            tr = march_dirichlet(circle, grid, exact.u)
            for t in (1.0, 2.0, 3.0):
                checks.append(Check("plane-wave energy (solver flux)", (), t, 0.0,
                                    energy_balance_residual(pw.eval, circle, t, trace=tr), 0.02))
                checks.append(Check("plane-wave lagrangian (solver flux)", (), t, 0.0,
                                    lagrangian_balance_residual(pw.eval, circle, t, trace=tr), 0.03))
    return checks


def verify_symmetry(n_samples: int = 1000, seed: int = 2024) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for dim in (1, 2, 3):
        k = WaveKernel(dim, 1.0)
        worst = [0.0, 0.0, 0.0]
        for _ in range(n_samples):
            x, y = rng.uniform(-1, 1, dim), rng.uniform(-1, 1, dim)
            m = rng.normal(size=dim)
            m /= np.linalg.norm(m)
            t = rng.uniform(0.0, 3.0)
            if dim == 2 and np.isclose(np.linalg.norm(x - y), t, rtol=0, atol=1e-12):
                continue
            worst = [max(a, b) for a, b in zip(worst, check_symmetry(k, x, y, m, t))]
        for name, v in zip(("U", "W", "H"), worst):
            checks.append(Check(f"{dim}-D {name} reciprocity", (), float("nan"), 0.0, v, 0.0))
    return checks


def _write_checks(path: Path, checks: list[Check], plot: bool) -> list[Path]:
    dim = max((len(c.point) for c in checks), default=0)
    cols = ["label"] + [f"x{i}" for i in range(dim)] + ["t", "target", "value", "residual", "tolerance", "pass"]

    def rows():
        for c in checks:
            pt = list(c.point) + [float("nan")] * (dim - len(c.point))
            yield (c.label, *pt, c.t, c.target, c.value, c.residual, c.tolerance, c.passed)

    artifacts = [write_csv(path, VERIFY_CSV_HEADER, cols, rows())]
    if plot:
        from . import plotting

        labels = [f"{c.label} t={c.t:g}" for c in checks]
        res = np.array([c.residual for c in checks])
        tol = np.array([max(c.tolerance, 1e-18) for c in checks])
        artifacts.append(plotting.plot_verify(path, labels, res, tol))
    return artifacts


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    if args.mode == "gauss":
        times = [float(x) for x in args.times.split(",")] if args.times else None
        checks = verify_gauss(args.dim, args.preset or "all", args.mesh, args.points, times, args.threads)
    elif args.mode == "hadamard":
        checks = verify_hadamard(args.preset or "all")
    elif args.mode == "energy":
        checks = verify_energy(args.preset or "all", args.threads)
    else:
        checks = verify_symmetry(args.samples)
    out = Path(args.out) if args.out else Path(f"verify_{args.mode}.csv")
    artifacts = _write_checks(out, checks, args.plot)
    n_fail = sum(not c.passed for c in checks)
    worst = max((abs(c.residual) for c in checks if c.mode == "max"), default=0.0)
    summary = {"checks": len(checks), "failed": n_fail, "max_abs_residual": worst}
    write_manifest(out, f"verify {args.mode}", None, artifacts, {"total": time.perf_counter() - t0}, summary)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        pt = ",".join(f"{v:.4g}" for v in c.point)
        print(f"{status}  {c.label:38s} x=({pt}) t={c.t:g} residual={c.residual:+.3e} tol={c.tolerance:.1e}")
    print(f"max |residual| = {worst:.3e}; {n_fail} of {len(checks)} checks failed")
    if n_fail:
        raise ToleranceExceeded(f"{n_fail} verification checks exceeded their tolerance")
    return 0


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------
def cmd_mesh(args) -> int:
    if args.mesh_cmd == "gen":
        if args.kind == "circle":
            mesh = build_circle(tuple(args.center or (0.0, 0.0)), args.radius, args.n)
        elif args.kind == "sphere":
            mesh = build_sphere(tuple(args.center or (0.0, 0.0, 0.0)), args.radius, args.refinement)
        else:
            mesh = build_interval(args.a1, args.a2)
        save_mesh(mesh, args.out)
        print(f"wrote {args.out}: dim={mesh.dim} elements={mesh.n_elements}")
        return 0
    mesh = load_mesh(args.path)
    info = {"dim": mesh.dim, "n_nodes": int(len(mesh.nodes)), "n_elements": mesh.n_elements,
            "h_min": mesh.h_min, "h_max": mesh.h_max, "total_measure": float(mesh.total_measure()),
            "enclosed_volume": float(mesh.signed_volume())}
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
def _add_quad_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("quadrature overrides (default: scenario [quadrature] values)")
    g.add_argument("--gauss-order", type=int, default=None, help="Gauss points per direction on regular pieces")
    g.add_argument("--sing-order", type=int, default=None, help="points per piece for singular or kinked integrands")
    g.add_argument("--pv-radius-factor", type=float, default=None,
                   help="principal-value exclusion radius relative to the smallest element")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavebem", description="Time-domain boundary integral solver for the wave equation.")
    p.add_argument("--version", action="version", version=f"wavebem {__version__}")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for point-wise evaluation (default: all cores)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-v info, -vv debug)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="march a scenario and write the boundary trace")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", default="trace.csv")
    s.add_argument("--residual-log", default=None, help="per-step residual CSV (default: <out>_residuals.csv)")
    s.add_argument("--plot", action="store_true", help="also write PNG figures next to the CSVs")
    _add_quad_flags(s)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="solve, then evaluate the field at the scenario probes")
    e.add_argument("--scenario", required=True)
    e.add_argument("--out", default="field.csv")
    e.add_argument("--tol", type=float, default=None, help="fail (exit 4) above this relative L2 error")
    e.add_argument("--plot", action="store_true")
    _add_quad_flags(e)
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("oracle-compare", help="representation from exact boundary data versus the oracle")
    o.add_argument("--scenario", required=True)
    o.add_argument("--out", default="compare.csv")
    o.add_argument("--tol", type=float, default=None)
    o.add_argument("--plot", action="store_true")
    _add_quad_flags(o)
    o.set_defaults(func=cmd_oracle_compare)

    v = sub.add_parser("verify", help="identity checks")
    v.add_argument("mode", choices=("gauss", "hadamard", "energy", "symmetry"))
    v.add_argument("--dim", type=int, default=2)
    v.add_argument("--preset", default=None,
                   help="gauss: [circle|sphere]-{interior,boundary,exterior,all}; hadamard: step-1d, radial-3d, "
                        "wrong-speed, all; energy: standing-wave, plane-wave, plane-wave-solver, all")
    v.add_argument("--mesh", default=None, help="gauss: mesh file instead of the preset mesh")
    v.add_argument("--points", default=None, help="gauss: file with one point per line")
    v.add_argument("--times", default=None, help="gauss: comma-separated times")
    v.add_argument("--samples", type=int, default=1000, help="symmetry: random samples per dimension")
    v.add_argument("--out", default=None)
    v.add_argument("--plot", action="store_true")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("mesh", help="generate or inspect meshes")
    msub = m.add_subparsers(dest="mesh_cmd", required=True)
    g = msub.add_parser("gen")
    g.add_argument("--kind", choices=("circle", "sphere", "interval"), required=True)
    g.add_argument("--n", type=int, default=64, help="circle: number of segments")
    g.add_argument("--refinement", type=int, default=2, help="sphere: icosphere level")
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--center", type=float, nargs="+", default=None)
    g.add_argument("--a1", type=float, default=0.0)
    g.add_argument("--a2", type=float, default=1.0)
    g.add_argument("--out", required=True)
    i = msub.add_parser("info")
    i.add_argument("path")
    m.set_defaults(func=cmd_mesh)
    return p


def _origin(exc: BaseException) -> str:
    """Name of the innermost package module in the traceback."""
    pkg_dir = Path(__file__).resolve().parent
    where = "cli"
    tb = exc.__traceback__
    while tb is not None:
        f = Path(tb.tb_frame.f_code.co_filename).resolve()
        if f.parent == pkg_dir:
            where = f.stem
        tb = tb.tb_next
    return where


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return int(args.func(args) or 0)
    except WaveBEMError as exc:
        where = _origin(exc)
        print(f"error ({type(exc).__name__} in {where}): {exc}", file=sys.stderr)
        return exc.exit_code
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
