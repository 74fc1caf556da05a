"""Marching-on-in-time solvers for the boundary integral equations.

Collocation is at element centroids and grid times ``t_k``.  The flux is
constant on each time interval and ``u`` is linear between nodes (see
:mod:`wavebem.representation`).  Lag matrices are convolutional, so they are
assembled once and the current-step matrix is factorised once.

Dirichlet problems solve a first-kind equation for the flux; Neumann
problems solve a second-kind equation for ``u``.  The interval problem in one
dimension reduces to explicit delayed recursions at the two endpoints.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import element_integrals as ei
from .errors import NumericalError, ValidationError
from .geometry import BoundaryMesh
from .quadrature import QuadratureConfig, TimeGrid
from .representation import (
    BoundaryTrace,
    EndpointHistory,
    InitialData,
    SourceTerm,
    _boundary_u0_term_2d,
    _time_windows,
    boundary_u0_term_3d,
    initial_terms_1d,
    lag_operators_2d,
    lag_operators_3d,
    volume_terms,
)

logger = logging.getLogger(__name__)

__all__ = [
    "BVPKind",
    "SolverConfig",
    "ResidualRecord",
    "MarchingState",
    "march_dirichlet",
    "march_neumann",
    "solve_1d_boundary",
    "default_time_step",
    "check_reassembly",
]

BVP_KINDS = ("dirichlet", "neumann", "mixed-1d")


@dataclass(frozen=True)
class BVPKind:
    """Boundary value problem type.

    ``dirichlet``: ``u`` prescribed; ``neumann``: normal derivative
    prescribed; ``mixed-1d``: one of each at the two ends of an interval.
    """

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in BVP_KINDS:
            raise ValidationError(f"unknown boundary value problem {self.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Marching options.

    Attributes
    ----------
    quad : QuadratureConfig
    smoothing : bool
        Replace each new step by the average with the previous one.
    check_reassembly : bool
        Rebuild the current-step operator at one step through the general
        evaluation path and compare with the cached matrix.
    cond_limit : float
        Condition numbers above this are reported as a singular system.
    c : float
        Wave speed.
    """

    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    smoothing: bool = False
    check_reassembly: bool = True
    cond_limit: float = 1e12
    c: float = 1.0


@dataclass(frozen=True)
class ResidualRecord:
    step: int
    time: float
    linf_residual: float
    cond_estimate: float


@dataclass
class MarchingState:
    """Progress of a marching solve.

    ``system_matrix`` depends only on mesh, ``dt`` and ``c``.  Entries of the
    trace for steps ``< step`` are final.
    """

    trace: BoundaryTrace
    step: int
    system_matrix: np.ndarray
    history_operator: object
    log: list = field(default_factory=list)


def default_time_step(mesh: BoundaryMesh, c: float) -> float:
    """``h_min / (2c)``."""
    return mesh.h_min / (2.0 * c)


# ---------------------------------------------------------------------------
def _element_series(data, mesh: BoundaryMesh, grid: TimeGrid, interval: bool) -> np.ndarray:
    """Boundary data as an array (n_steps + 1, n_elems).

    ``data`` is an array or a callable ``f(points, t)``.  Callables are
    sampled at nodes, or averaged over intervals with a 3-point Gauss rule when
    ``interval`` is true.
    """
    K, N = grid.n_steps, mesh.n_elements
    if callable(data):
        t = grid.times
        out = np.empty((K + 1, N))
        X = mesh.centroids
        out[0] = data(X, 0.0)
        if interval:
            xg, wg = ei.gauss_legendre(3)
            out[1:] = 0.0
            for a, w in zip(xg, wg):
                for k in range(1, K + 1):
                    out[k] += w * np.asarray(data(X, t[k - 1] + a * grid.dt))
        else:
            for k in range(1, K + 1):
                out[k] = data(X, t[k])
        return out
    arr = np.asarray(data, dtype=float)
    if arr.shape != (K + 1, N):
        raise ValidationError(f"boundary data must have shape {(K + 1, N)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("boundary data contain non-finite values")
    return arr


def _extra_terms(mesh: BoundaryMesh, init: InitialData, src: SourceTerm, u0_elem: np.ndarray,
                 grid: TimeGrid, cfg: SolverConfig) -> np.ndarray | None:
    """Initial-data and source contributions at every collocation point and step."""
    if init.is_zero and src.is_zero:
        return None
    K, N = grid.n_steps, mesh.n_elements
    out = np.zeros((K + 1, N))
    t = grid.times
    c = cfg.c
    for k in range(1, K + 1):
        for i in range(N):
            x = mesh.centroids[i]
            val = volume_terms(mesh, init, src, x, t[k], c, cfg.quad)
            if init.u0 is not None:
                if mesh.dim == 2:
                    val += _boundary_u0_term_2d(mesh, u0_elem, x, t[k], c)
                else:
                    val += boundary_u0_term_3d(mesh, u0_elem, x, t[k], c)
            out[k, i] = val
    return out


def _factor(M: np.ndarray, cfg: SolverConfig):
    if not np.all(np.isfinite(M)):
        raise NumericalError("system matrix contains non-finite entries")
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > cfg.cond_limit:
        raise NumericalError(f"current-step system is singular (condition estimate {cond:.3e})")
    return scipy.linalg.lu_factor(M), cond


def check_reassembly(mesh: BoundaryMesh, grid: TimeGrid, c: float, step: int, cached: np.ndarray,
                     order: int = 8, which: str = "single") -> float:
    """Relative difference between the cached lag-0 operator and a rebuild.

    The rebuild goes through the general retarded-window path used for
    evaluation at time ``t_step``.
    """
    t = grid.times[step]
    edges, _ = _time_windows(grid, t)
    X = mesh.centroids
    if mesh.dim == 2:
        s1, s2, h = ei.segment_frames(mesh.vertices, mesh.normals, X)
        A, B = ei.segment_time_integrals(s1, s2, h, c, edges[:2], order)
        fresh = (A if which == "single" else B)[..., 0]
    else:
        ops = lag_operators_3d(mesh, X, c, grid.dt, 1, order)
        fresh = ops.SL[0] if which == "single" else ops.E[0]
    scale = max(float(np.abs(cached).max()), 1e-300)
    return float(np.abs(fresh - cached).max()) / scale


def _march(mesh: BoundaryMesh, grid: TimeGrid, kind: str, data, init, src, cfg: SolverConfig) -> BoundaryTrace:
    if mesh.dim not in (2, 3):
        raise ValidationError("marching solvers need a 2-D or 3-D mesh; use solve_1d_boundary in 1-D")
    init = init or InitialData()
    src = src or SourceTerm()
    c = cfg.c
    K, N, dt = grid.n_steps, mesh.n_elements, grid.dt
    t0 = time.perf_counter()
    trace = BoundaryTrace.zeros(mesh, grid)
    u0_elem = np.zeros(N) if init.u0 is None else np.asarray(init.u0(mesh.centroids), dtype=float)
    if kind == "dirichlet":
        u = _element_series(data, mesh, grid, interval=False)
        if init.u0 is not None and not np.allclose(u[0], u0_elem, atol=1e-8 * max(1.0, np.abs(u0_elem).max())):
            logger.warning("boundary data at t=0 differ from the initial displacement")
        trace.u[:] = u
        trace.refresh_u_dot()
        trace.known_mask = {"u": True, "u_dot": True, "du_dn": False}
    else:
        trace.du_dn[:] = _element_series(data, mesh, grid, interval=True)
        trace.u[0] = u0_elem
        trace.known_mask = {"u": False, "u_dot": False, "du_dn": True}
    if init.u0_dot is not None:
        trace.u_dot[0] = np.asarray(init.u0_dot(mesh.centroids), dtype=float)
    extra = _extra_terms(mesh, init, src, u0_elem, grid, cfg)

    order = cfg.quad.sing_order
    if mesh.dim == 2:
        P, D = lag_operators_2d(mesh, mesh.centroids, c, dt, K, order)
        jump = math.pi
        n_lags = K
        if kind == "dirichlet":
            M = c * P[0]
        else:
            M = jump * np.eye(N) - (c / dt) * D[0]
        ops = (P, D)
    else:
        L3 = lag_operators_3d(mesh, mesh.centroids, c, dt, None, order)
        jump = 2.0 * math.pi
        n_lags = L3.n_lags
        E = L3.E
        if kind == "dirichlet":
            M = L3.SL[0]
        else:
            M = jump * np.eye(N) - E[0] / dt
        ops = L3
    lu, cond = _factor(M, cfg)
    t_asm = time.perf_counter() - t0
    logger.info("%s march: %d elements, %d steps, cond %.3e, assembly %.2fs", kind, N, K, cond, t_asm)
    if cfg.check_reassembly and K >= 2:
        k_chk = int(np.random.default_rng(K * 7919 + N).integers(1, K + 1))
        if kind == "dirichlet":
            cached = P[0] if mesh.dim == 2 else L3.SL[0]
            diff = check_reassembly(mesh, grid, c, k_chk, cached, order, "single")
        else:
            cached = D[0] if mesh.dim == 2 else E[0]
            diff = check_reassembly(mesh, grid, c, k_chk, cached, order, "double")
        if diff > 1e-10:
            raise NumericalError(f"current-step operator changed at step {k_chk} (rel diff {diff:.2e})")

    state = MarchingState(trace, 1, M, ops)
    for k in range(1, K + 1):
        L = min(k, n_lags)
        m = np.arange(k, k - L, -1)  # intervals k, k-1, ...
        if mesh.dim == 2:
            P, D = ops
            hist_q = c * np.einsum("lij,lj->i", P[1:L], trace.du_dn[m[1:]]) if L > 1 else np.zeros(N)
            hist_v = c * np.einsum("lij,lj->i", D[1:L], trace.u_dot[m[1:]]) if L > 1 else np.zeros(N)
            if kind == "dirichlet":
                rhs = jump * trace.u[k] - hist_q - hist_v - c * D[0] @ trace.u_dot[k]
            else:
                rhs = hist_q + c * P[0] @ trace.du_dn[k] + hist_v - (c / dt) * D[0] @ trace.u[k - 1]
        else:
            SL, DA = ops.SL, ops.DA
            hist_q = np.einsum("lij,lj->i", SL[1:L], trace.du_dn[m[1:]]) if L > 1 else np.zeros(N)
            hist_v = np.einsum("lij,lj->i", E[1:L], trace.u_dot[m[1:]]) if L > 1 else np.zeros(N)
            hist_u = np.einsum("lij,lj->i", DA[:L], trace.u[m - 1])
            if kind == "dirichlet":
                rhs = jump * trace.u[k] - hist_q + hist_u - hist_v - E[0] @ trace.u_dot[k]
            else:
                rhs = hist_q + SL[0] @ trace.du_dn[k] - hist_u + hist_v - E[0] @ trace.u[k - 1] / dt
        if extra is not None:
            rhs = rhs - extra[k] if kind == "dirichlet" else rhs + extra[k]
        x = scipy.linalg.lu_solve(lu, rhs)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"non-finite solution at step {k}")
        res = float(np.abs(M @ x - rhs).max())
        if cfg.smoothing and k > 1:
            prev = trace.du_dn[k - 1] if kind == "dirichlet" else trace.u[k - 1]
            x = 0.5 * (x + prev)
        if kind == "dirichlet":
            trace.du_dn[k] = x
        else:
            trace.u[k] = x
            trace.u_dot[k] = (x - trace.u[k - 1]) / dt
        state.log.append(ResidualRecord(k, float(grid.times[k]), res, cond))
        state.step = k + 1
    trace.solver_log = state.log
    logger.info("%s march finished in %.2fs", kind, time.perf_counter() - t0)
    return trace


def march_dirichlet(mesh: BoundaryMesh, grid: TimeGrid, data, init: InitialData | None = None,
                    src: SourceTerm | None = None, cfg: SolverConfig | None = None) -> BoundaryTrace:
    """Recover the normal derivative from prescribed boundary values.

    Parameters
    ----------
    data : array (n_steps + 1, n_elems) or callable ``f(points, t)``
        Boundary values at the grid nodes (centroids).
    init, src : optional initial data and source term
    cfg : SolverConfig

    Returns
    -------
    BoundaryTrace
        With ``du_dn`` filled and the per-step residual log in ``solver_log``.
    """
    return _march(mesh, grid, "dirichlet", data, init, src, cfg or SolverConfig())


def march_neumann(mesh: BoundaryMesh, grid: TimeGrid, data, init: InitialData | None = None,
                  src: SourceTerm | None = None, cfg: SolverConfig | None = None) -> BoundaryTrace:
    """Recover boundary values from a prescribed normal derivative.

    ``data`` follows the interval layout: row ``k`` is the flux on
    ``(t_{k-1}, t_k]``.  Callables are averaged over each interval.
    """
    return _march(mesh, grid, "neumann", data, init, src, cfg or SolverConfig())


# ---------------------------------------------------------------------------
# 1-D
# ---------------------------------------------------------------------------
def _hermite(s: float, times: np.ndarray, F: np.ndarray, dF: np.ndarray, upto: int) -> float:
    """Cubic Hermite interpolation of nodal ``F`` with slopes ``dF`` (nodes ``<= upto``)."""
    if s <= 0.0:
        return 0.0
    dt = times[1] - times[0]
    m = min(int(s / dt), upto - 1) if upto > 0 else 0
    if upto == 0 or abs(s - times[min(int(round(s / dt)), upto)]) <= 1e-12 * dt:
        return float(F[min(int(round(s / dt)), upto)])
    u = (s - times[m]) / dt
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    return float(h00 * F[m] + h10 * dt * dF[m] + h01 * F[m + 1] + h11 * dt * dF[m + 1])


def _endpoint_slope(init: InitialData, a: float, inward: float, d: float) -> float:
    if init.u0 is None:
        return 0.0
    h = 1e-4 * d
    f = lambda s: float(init.u0(np.array([[s]]))[0])
    # second-order one-sided difference towards the interior
    return inward * (-3 * f(a) + 4 * f(a + inward * h) - f(a + 2 * inward * h)) / (2 * h)


def solve_1d_boundary(a1: float, a2: float, grid: TimeGrid, kind: BVPKind | str,
                      u_known=(None, None), ux_known=(None, None), init: InitialData | None = None,
                      c: float = 1.0) -> EndpointHistory:
    """Solve the delayed endpoint equations of the interval problem.

    At each end ``a_e`` (``σ = -1`` at ``a1``, ``+1`` at ``a2``):
    ``u_e(t) = σ c F_e(t) + H(ct - d)[u_o(t - d/c) - σ c F_o(t - d/c)] + I_e(t)``
    with ``F`` the running time integral of ``u_x`` and ``I_e`` the
    d'Alembert terms of the initial data.  The retarded values are already
    known when ``dt <= d/c``, so every step is explicit.

    Parameters
    ----------
    kind : BVPKind or str
        ``dirichlet`` (``u`` known at both ends), ``neumann`` (``u_x`` known at
        both ends) or ``mixed-1d``.
    u_known, ux_known : pair of arrays (n_steps + 1,) or None
        Nodal histories at ``a1`` and ``a2``.  ``u_x`` is the spatial
        derivative (not the outward normal derivative).

    Returns
    -------
    EndpointHistory
    """
    kind = kind if isinstance(kind, BVPKind) else BVPKind(kind)
    if not a1 < a2:
        raise ValidationError("interval endpoints must satisfy a1 < a2")
    init = init or InitialData()
    d = a2 - a1
    if grid.dt > d / c * (1 + 1e-12):
        raise ValidationError(f"dt={grid.dt} exceeds the crossing time d/c={d / c}; retarded values would be skipped")
    K = grid.n_steps
    t = grid.times
    known_u = [None if v is None else np.asarray(v, dtype=float).reshape(K + 1) for v in u_known]
    known_ux = [None if v is None else np.asarray(v, dtype=float).reshape(K + 1) for v in ux_known]
    for e in (0, 1):
        if (known_u[e] is None) == (known_ux[e] is None):
            raise ValidationError(f"endpoint {e + 1}: prescribe exactly one of u and u_x")
    n_u = sum(v is not None for v in known_u)
    expected = {"dirichlet": 2, "neumann": 0, "mixed-1d": 1}[kind.kind]
    if n_u != expected:
        raise ValidationError(f"{kind.kind} problem does not match the prescribed data")

    a = (a1, a2)
    sigma = (-1.0, 1.0)
    u = np.zeros((K + 1, 2))
    ux = np.zeros((K + 1, 2))
    F = np.zeros((K + 1, 2))
    for e in (0, 1):
        if known_u[e] is not None:
            u[:, e] = known_u[e]
            ux[0, e] = _endpoint_slope(init, a[e], -sigma[e], d)
        else:
            ux[:, e] = known_ux[e]
            u[0, e] = float(init.u0(np.array([[a[e]]]))[0]) if init.u0 is not None else 0.0
    lag = d / c
    for k in range(1, K + 1):
        tk = t[k]
        for e in (0, 1):
            o = 1 - e
            I_e = initial_terms_1d(init, a1, a2, a[e], tk, c)
            s = tk - lag
            Hf = 1.0 if s > 0 else (0.5 if s == 0 else 0.0)
            delayed = 0.0
            if Hf:
                u_o = float(np.interp(s, t[:k], u[:k, o]))
                F_o = _hermite(s, t, F[:, o], ux[:, o], k - 1)
                delayed = Hf * (u_o - sigma[e] * c * F_o)
            if known_ux[e] is not None:
                F[k, e] = F[k - 1, e] + 0.5 * grid.dt * (ux[k - 1, e] + ux[k, e])
                u[k, e] = sigma[e] * c * F[k, e] + delayed + I_e
            else:
                F[k, e] = sigma[e] * (u[k, e] - delayed - I_e) / c
                if k == 1:
                    ux[k, e] = 2.0 * (F[1, e] - F[0, e]) / grid.dt - ux[0, e]
                else:
                    ux[k, e] = (3.0 * F[k, e] - 4.0 * F[k - 1, e] + F[k - 2, e]) / (2.0 * grid.dt)
        if not np.all(np.isfinite(u[k])) or not np.all(np.isfinite(ux[k])):
            raise NumericalError(f"non-finite endpoint values at step {k}")
    return EndpointHistory(a1, a2, grid, u, ux)
