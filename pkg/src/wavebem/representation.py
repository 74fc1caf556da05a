"""Retarded-potential representation of wave fields from boundary data.

Boundary data live on a :class:`BoundaryTrace`.  Per element they are

* ``u``: nodal values at ``t_k``, linear in time between nodes,
* ``u_dot``: constant on each interval ``(t_{k-1}, t_k]``, equal to the
  difference quotient of ``u``,
* ``du_dn``: constant on each interval.

Index ``k >= 1`` of the interval arrays refers to ``(t_{k-1}, t_k]``.  Index
0 stores the value at ``t = 0`` for reference only.

Normalisation
-------------
With ``H`` the domain indicator (1 inside, 1/2 on the boundary, 0 outside):

2-D
    ``2π H u = c ∫∫ [q + (1/r)(∂r/∂n) τ u̇] dS dτ / √(c²τ² - r²)``
    ``+ ∂_t ∫ u₀ / (c√·) + ∫ u̇₀ / (c√·)``
    ``+ ∫_S u₀ (ct/r)(∂r/∂n) / √(c²t² - r²) dS``
    ``- c ∫∫ G dV dτ / √(c²τ² - r²)``.

3-D
    ``4π H u = ∫_{S_t} [q/r - u ∂(1/r)/∂n + c⁻¹ u̇ ∂ln r/∂n]``
    ``+ c⁻¹ ∂_t ∫_{S_t} u₀ ∂ln r/∂n + Kirchhoff terms - ∫ G(y, t - r/c)/r dV``.
    Boundary quantities are taken at the retarded time ``t - r/c``.

1-D
    ``2 H u = c[F₂(t - d₂/c) - F₁(t - d₁/c)] + sgn(x - a₁) u(a₁, t - d₁/c)``
    ``- sgn(x - a₂) u(a₂, t - d₂/c) + d'Alembert terms`` where ``F_k`` is the
    running time integral of ``u_x(a_k, ·)`` and ``d_k = |x - a_k|``.

Boundary points use exact element integrals, so the singular double-layer
term is the principal value (the flat self element contributes zero).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import element_integrals as ei
from .errors import HistoryUnderflowError, ValidationError
from .geometry import BoundaryMesh, DomainIndicator, horizon_time
from .quadrature import (
    QuadratureConfig,
    TimeGrid,
    disk_volume_integral_2d,
    sphere_slice_integral,
    triangle_rule,
)

logger = logging.getLogger(__name__)

__all__ = [
    "InitialData",
    "SourceTerm",
    "BoundaryTrace",
    "EndpointHistory",
    "FieldSample",
    "lag_operators_2d",
    "lag_operators_3d",
    "evaluate_2d",
    "evaluate_3d",
    "evaluate_1d",
    "evaluate_series",
    "cauchy_2d",
    "cauchy_3d",
    "boundary_u0_term_3d",
    "volume_terms",
]


# ---------------------------------------------------------------------------
# data containers
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class InitialData:
    """Initial displacement and velocity.

    Callables take points of shape (m, dim) and return (m,) values.  ``None``
    means identically zero.  ``support`` restricts both to a domain; when it
    is ``None`` the evaluators use the indicator of the boundary mesh.
    """

    u0: Callable | None = None
    u0_dot: Callable | None = None
    support: DomainIndicator | None = None

    @property
    def is_zero(self) -> bool:
        return self.u0 is None and self.u0_dot is None


@dataclass(frozen=True)
class SourceTerm:
    """Right-hand side ``G`` of ``Δu - c⁻² u_tt = G``.

    ``G(points, times)`` with points (m, dim) and times (m,).
    """

    G: Callable | None = None
    active: bool = False

    @property
    def is_zero(self) -> bool:
        return not self.active or self.G is None


@dataclass(frozen=True)
class FieldSample:
    x: tuple
    t: float
    value: float


@dataclass
class BoundaryTrace:
    """Time histories of the Cauchy data on every boundary element.

    Attributes
    ----------
    mesh : BoundaryMesh
    grid : TimeGrid
    u, u_dot, du_dn : ndarray, shape (n_steps + 1, n_elems)
        See the module docstring for the time layout.
    known_mask : dict
        Which of ``"u"``, ``"u_dot"``, ``"du_dn"`` are prescribed data.
    """

    mesh: BoundaryMesh
    grid: TimeGrid
    u: np.ndarray
    u_dot: np.ndarray
    du_dn: np.ndarray
    known_mask: dict = field(default_factory=lambda: {"u": True, "u_dot": True, "du_dn": True})
    solver_log: list = field(default_factory=list)

    def __post_init__(self) -> None:
        shape = (self.grid.n_steps + 1, self.mesh.n_elements)
        for name in ("u", "u_dot", "du_dn"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValidationError(f"trace.{name} must have shape {shape}, got {arr.shape}")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, mesh: BoundaryMesh, grid: TimeGrid, known_mask=None) -> "BoundaryTrace":
        shape = (grid.n_steps + 1, mesh.n_elements)
        return cls(mesh, grid, np.zeros(shape), np.zeros(shape), np.zeros(shape),
                   dict(known_mask or {"u": False, "u_dot": False, "du_dn": False}))

    @classmethod
    def from_oracle(cls, oracle, mesh: BoundaryMesh, grid: TimeGrid, n_gauss: int = 3) -> "BoundaryTrace":
        """Sample consistent Cauchy data of an exact solution at element centroids.

        ``u`` is sampled at the nodes, ``du_dn`` is averaged over each interval
        with an ``n_gauss``-point Gauss rule.
        """
        X = mesh.centroids
        t = grid.times
        K = grid.n_steps
        u = np.empty((K + 1, mesh.n_elements))
        q = np.empty_like(u)
        ud0 = None
        for k in range(K + 1):
            uk, utk, gk = oracle.eval(X, t[k])
            u[k] = uk
            if k == 0:
                ud0 = utk
                q[0] = np.einsum("ij,ij->i", gk, mesh.normals)
        xg, wg = ei.gauss_legendre(n_gauss)
        q[1:] = 0.0
        for a, w in zip(xg, wg):
            for k in range(1, K + 1):
                g = oracle.eval(X, t[k - 1] + a * grid.dt)[2]
                q[k] += w * np.einsum("ij,ij->i", g, mesh.normals)
        udot = np.empty_like(u)
        udot[0] = ud0
        udot[1:] = np.diff(u, axis=0) / grid.dt
        return cls(mesh, grid, u, udot, q)

    def copy(self) -> "BoundaryTrace":
        return BoundaryTrace(self.mesh, self.grid, self.u.copy(), self.u_dot.copy(),
                             self.du_dn.copy(), dict(self.known_mask))

    def refresh_u_dot(self) -> None:
        """Recompute ``u_dot`` from ``u`` by differencing."""
        self.u_dot[1:] = np.diff(self.u, axis=0) / self.grid.dt


@dataclass
class EndpointHistory:
    """Histories of ``u`` and ``u_x`` at the two ends of an interval.

    Both arrays have shape (n_steps + 1, 2) with nodal values at ``t_k``;
    columns are the endpoints ``a1`` and ``a2``.  Between nodes ``u`` and
    ``u_x`` are linear, so their running integrals are exact trapezoid sums.
    """

    a1: float
    a2: float
    grid: TimeGrid
    u: np.ndarray
    ux: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.grid.n_steps + 1, 2)
        self.u = np.asarray(self.u, dtype=float).reshape(shape)
        self.ux = np.asarray(self.ux, dtype=float).reshape(shape)

    @classmethod
    def from_oracle(cls, oracle, a1: float, a2: float, grid: TimeGrid) -> "EndpointHistory":
        t = grid.times
        u = np.empty((len(t), 2))
        ux = np.empty((len(t), 2))
        for k, tk in enumerate(t):
            uk, _, gk = oracle.eval(np.array([[a1], [a2]]), tk)
            u[k], ux[k] = uk, gk[:, 0]
        return cls(a1, a2, grid, u, ux)

    def _check(self, s: float) -> None:
        if s > self.grid.t_end * (1.0 + 1e-12):
            raise HistoryUnderflowError(f"time {s} beyond stored history {self.grid.t_end}")

    def u_at(self, s: float, end: int) -> float:
        """Linear interpolation of ``u`` at time ``s >= 0``."""
        self._check(s)
        return float(np.interp(s, self.grid.times, self.u[:, end]))

    def flux_integral(self, s: float, end: int) -> float:
        """``∫_0^s u_x(a_end, τ) dτ`` for the piecewise-linear ``u_x``."""
        if s <= 0.0:
            return 0.0
        self._check(s)
        dt = self.grid.dt
        ux = self.ux[:, end]
        m = min(int(s / dt), self.grid.n_steps)
        F = 0.5 * dt * float(np.sum(ux[1 : m + 1] + ux[:m])) if m > 0 else 0.0
        rem = s - m * dt
        if rem > 0.0:
            f_s = float(np.interp(s, self.grid.times, ux))
            F += 0.5 * rem * (ux[m] + f_s)
        return F


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------
def _support(init: InitialData, mesh: BoundaryMesh):
    return init.support if init.support is not None else DomainIndicator(mesh)


def _time_windows(trace_grid: TimeGrid, t: float):
    """Retarded-time windows for evaluation at ``t``.

    Returns ``edges`` in the lag variable ``τ`` (ascending, ``edges[0] = 0``,
    ``edges[-1] = t``) and the trace interval index of each window.
    """
    dt = trace_grid.dt
    k = int(math.floor(t / dt + 1e-9))
    if abs(t - k * dt) <= 1e-9 * dt:
        edges = dt * np.arange(k + 1, dtype=float)
        intervals = np.arange(k, 0, -1)
    else:
        edges = np.concatenate([[0.0], (t - k * dt) + dt * np.arange(k + 1)])
        intervals = np.arange(k + 1, 0, -1)
    if intervals.size and intervals[0] > trace_grid.n_steps:
        raise HistoryUnderflowError(f"evaluation time {t} beyond stored history {trace_grid.t_end}")
    edges[-1] = t
    return edges, intervals


# ---------------------------------------------------------------------------
# lag operators (convolution weights on the uniform grid)
# ---------------------------------------------------------------------------
def lag_operators_2d(mesh: BoundaryMesh, X, c: float, dt: float, n_lags: int, order: int = 8):
    """Lag matrices of the 2-D retarded layers.

    ``P[l, i, j] = ∫_{l·dt}^{(l+1)·dt} A_ij(τ) dτ`` and likewise ``D`` with ``B``,
    so that ``c Σ_l (P_l q^{k-l} + D_l u̇^{k-l})`` is the boundary part of
    ``2π H u`` at ``(X_i, t_k)``.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    s1, s2, h = ei.segment_frames(mesh.vertices, mesh.normals, X)
    P, D = ei.segment_time_integrals(s1, s2, h, c, dt * np.arange(n_lags + 1), order)
    return np.ascontiguousarray(np.moveaxis(P, -1, 0)), np.ascontiguousarray(np.moveaxis(D, -1, 0))


def _triangle_bounds(mesh: BoundaryMesh, X: np.ndarray):
    """Lower and upper bounds of ``|y - x|`` over each triangle."""
    rc = np.linalg.norm(X[:, None, :] - mesh.centroids[None, :, :], axis=2)
    circ = np.linalg.norm(mesh.vertices - mesh.centroids[:, None, :], axis=2).max(axis=1)
    hgt = np.abs(np.einsum("pnk,nk->pn", mesh.vertices[None, :, 0, :] - X[:, None, :], mesh.normals))
    lo = np.maximum(np.maximum(rc - circ[None, :], hgt), 0.0)
    hi = np.linalg.norm(X[:, None, None, :] - mesh.vertices[None], axis=3).max(axis=2)
    return lo, hi


def _cumulative_moments_3d(mesh: BoundaryMesh, X: np.ndarray, R: float, lo, hi, full, order: int):
    """Moments of all (point, triangle) pairs inside the ball of radius ``R``."""
    P, N = lo.shape
    out = np.zeros((ei.N_TRI_MOMENTS, P, N))
    done = R >= hi
    out[:, done] = full[:, done]
    part = (R > lo) & ~done
    if np.any(part):
        pi, nj = np.nonzero(part)
        mom = ei.triangle_moments(X[pi], mesh.vertices[nj], mesh.normals[nj], np.full(len(pi), R), order)
        out[:, pi, nj] = mom
    return out


def _full_moments_3d(mesh: BoundaryMesh, X: np.ndarray, order: int):
    P = len(X)
    N = mesh.n_elements
    pi = np.repeat(np.arange(P), N)
    nj = np.tile(np.arange(N), P)
    mom = ei.triangle_moments(X[pi], mesh.vertices[nj], mesh.normals[nj], np.full(len(pi), np.inf), order)
    return mom.reshape(ei.N_TRI_MOMENTS, P, N)


def _shell_moments_3d(mesh: BoundaryMesh, X: np.ndarray, radii: np.ndarray, order: int):
    """Moments over the shells ``radii[i] <= r < radii[i+1]``.

    Returns
    -------
    ndarray, shape (len(radii) - 1, 6, P, N)
    """
    lo, hi = _triangle_bounds(mesh, X)
    full = _full_moments_3d(mesh, X, order)
    prev = _cumulative_moments_3d(mesh, X, radii[0], lo, hi, full, order)
    shells = np.empty((len(radii) - 1,) + prev.shape)
    for i in range(1, len(radii)):
        cur = _cumulative_moments_3d(mesh, X, radii[i], lo, hi, full, order)
        shells[i - 1] = cur - prev
        prev = cur
    return shells


@dataclass(frozen=True)
class LagOperators3D:
    """Lag matrices of the 3-D retarded layers.

    The boundary part of ``4π H u`` at ``(X_i, t_k)`` is
    ``Σ_l [SL_l q^{k-l} - DA_l u^{k-l-1} + E_l u̇^{k-l}]`` with
    ``E_l = VL_l / c - DB_l``.
    """

    SL: np.ndarray
    DA: np.ndarray
    DB: np.ndarray
    VL: np.ndarray
    c: float

    @property
    def E(self) -> np.ndarray:
        return self.VL / self.c - self.DB

    @property
    def n_lags(self) -> int:
        return self.SL.shape[0]


def lag_operators_3d(mesh: BoundaryMesh, X, c: float, dt: float, n_lags: int | None = None, order: int = 8):
    """Assemble :class:`LagOperators3D` for field points ``X``.

    Lags beyond the largest point-element distance vanish and are dropped
    when ``n_lags`` is ``None``.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 3)
    _, hi = _triangle_bounds(mesh, X)
    need = int(math.ceil(hi.max() / (c * dt))) + 1
    L = need if n_lags is None else min(n_lags, need)
    radii = c * dt * np.arange(L + 1)
    radii[-1] = max(radii[-1], hi.max() * (1 + 1e-12)) if n_lags is None else radii[-1]
    sh = _shell_moments_3d(mesh, X, radii, order)
    l = np.arange(L)[:, None, None]
    S0d, S1d = sh[:, 2], sh[:, 3]
    DB = (l + 1) * dt * S0d - S1d / c
    return LagOperators3D(SL=sh[:, 0], DA=S0d, DB=DB, VL=sh[:, 4], c=c)


# ---------------------------------------------------------------------------
# volume and initial-data terms
# ---------------------------------------------------------------------------
def _fd_time(f: Callable[[float], float], t: float, h: float) -> float:
    if t - 2 * h <= 0.0:
        # one-sided near t = 0 (second order)
        return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2 * h)) / (2.0 * h)
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12.0 * h)


def volume_terms(mesh: BoundaryMesh, init: InitialData, src: SourceTerm, x, t: float, c: float,
                 cfg: QuadratureConfig | None = None) -> float:
    """Initial-data and source contributions (normalised: ``2π H u`` in 2-D,
    ``4π H u`` in 3-D), excluding the boundary-induced ``u₀`` term."""
    cfg = cfg or QuadratureConfig()
    if t <= 0:
        return 0.0
    x = np.asarray(x, dtype=float).reshape(mesh.dim)
    ind = _support(init, mesh)
    order = max(4 * cfg.gauss_order, 32)
    h = 1e-3 * t
    total = 0.0
    if mesh.dim == 2:
        if init.u0_dot is not None:
            total += disk_volume_integral_2d(x, t, c, init.u0_dot, ind, order)
        if init.u0 is not None:
            total += _fd_time(lambda s: disk_volume_integral_2d(x, s, c, init.u0, ind, order), t, h)
        if not src.is_zero:
            xg, wg = ei.gauss_legendre(order)
            for a, w in zip(xg, wg):
                tau = a * t
                g = lambda p, _s=t - tau: src.G(p, np.full(len(p), _s))
                total -= c * c * w * t * disk_volume_integral_2d(x, tau, c, g, ind, order)
        return total
    if mesh.dim == 3:
        if init.u0_dot is not None:
            total += sphere_slice_integral(x, t, c, init.u0_dot, ind, order)
        if init.u0 is not None:
            total += _fd_time(lambda s: sphere_slice_integral(x, s, c, init.u0, ind, order), t, h)
        if not src.is_zero:
            # -∫_{r<ct} G(y, t - r/c)/r dV = -c² ∫_0^t slice(τ) dτ with r = cτ
            xg, wg = ei.gauss_legendre(order)
            for a, w in zip(xg, wg):
                tau = a * t
                g = lambda p, _s=t - tau: src.G(p, np.full(len(p), _s))
                total -= c * c * w * t * sphere_slice_integral(x, tau, c, g, ind, order)
        return total
    raise ValidationError("volume_terms is defined for dim 2 and 3")


def boundary_u0_term_3d(mesh: BoundaryMesh, u0_elem, x, t: float, c: float, h: float | None = None,
                        order: int = 8) -> float:
    """``c⁻¹ ∂_t ∫_{S_t} u₀ ∂ln r/∂n dS`` with element-constant ``u₀``.

    The integral is constant once the retarded sphere contains the whole
    boundary; the difference quotient is then exactly zero.
    """
    u0_elem = np.asarray(u0_elem, dtype=float)
    if t <= 0 or not np.any(u0_elem):
        return 0.0
    x = np.asarray(x, dtype=float).reshape(1, 3)
    h = h or 1e-4 * max(t, mesh.diameter / c)
    lo, hi = _triangle_bounds(mesh, x)
    full = _full_moments_3d(mesh, x, order)

    def K(s: float) -> float:
        if s <= 0:
            return 0.0
        mom = _cumulative_moments_3d(mesh, x, c * s, lo, hi, full, order)[4, 0]
        return float(np.dot(mom, u0_elem))

    return (K(t + h) - K(max(t - h, 0.0))) / ((t + h) - max(t - h, 0.0)) / c


def _boundary_u0_term_2d(mesh: BoundaryMesh, u0_elem, x, t: float, c: float) -> float:
    """``∫_{S_t} u₀ (ct/r)(∂r/∂n) / √(c²t² - r²) dS = c Σ u₀_j B_j(t)``."""
    u0_elem = np.asarray(u0_elem, dtype=float)
    if t <= 0 or not np.any(u0_elem):
        return 0.0
    s1, s2, hh = ei.segment_frames(mesh.vertices, mesh.normals, np.asarray(x, float).reshape(1, 2))
    B = ei.segment_B(s1, s2, hh, c * t, c)[0]
    return c * float(np.dot(B, u0_elem))


# ---------------------------------------------------------------------------
# 2-D evaluation
# ---------------------------------------------------------------------------
def _boundary_part_2d_first(trace: BoundaryTrace, X, t: float, c: float, order: int) -> np.ndarray:
    edges, m = _time_windows(trace.grid, t)
    if m.size == 0:
        return np.zeros(len(X))
    mesh = trace.mesh
    s1, s2, h = ei.segment_frames(mesh.vertices, mesh.normals, X)
    IA, IB = ei.segment_time_integrals(s1, s2, h, c, edges, order)
    q = trace.du_dn[m]  # (M, N)
    ud = trace.u_dot[m]
    return c * (np.einsum("pnm,mn->p", IA, q) + np.einsum("pnm,mn->p", IB, ud))


def _boundary_part_2d_second(trace: BoundaryTrace, X, t: float, c: float, order: int) -> np.ndarray:
    """Space-outer form: Gauss points on segments, exact time integrals of the
    piecewise-constant histories."""
    edges, m = _time_windows(trace.grid, t)
    mesh = trace.mesh
    out = np.zeros(len(X))
    if m.size == 0:
        return out
    xg, wg = ei.gauss_legendre(order)
    Y = mesh.vertices[:, 0, None, :] + xg[None, :, None] * (mesh.vertices[:, 1] - mesh.vertices[:, 0])[:, None, :]
    W = wg[None, :] * mesh.measures[:, None]  # (N, g)
    q = trace.du_dn[m]
    ud = trace.u_dot[m]
    for p, x in enumerate(X):
        d = Y - x
        r = np.linalg.norm(d, axis=2)
        hn = np.einsum("ngk,nk->ng", d, mesh.normals)
        # ∫ dτ/√(c²τ²-r²) = arccosh(cτ/r)/c ; ∫ τ dτ/√ = √(c²τ²-r²)/c²
        tau = np.clip(edges[None, None, :] * c, r[..., None], None)
        rs = np.where(r > 0, r, 1.0)[..., None]
        Fa = np.arccosh(tau / rs) / c
        Fb = np.sqrt(np.maximum(tau**2 - r[..., None] ** 2, 0.0)) / (c * c)
        Ia = np.diff(Fa, axis=2)  # (N, g, M)
        Ib = np.diff(Fb, axis=2) * (hn / np.where(r > 0, r * r, 1.0))[..., None]
        out[p] = c * (np.einsum("ng,ngm,mn->", W, Ia, q) + np.einsum("ng,ngm,mn->", W, Ib, ud))
    return out


def evaluate_2d(trace: BoundaryTrace, init: InitialData | None, src: SourceTerm | None, x, t: float,
                cfg: QuadratureConfig | None = None, c: float = 1.0, form: str = "auto",
                normalized: bool = False) -> float:
    """Field value from the 2-D representation.

    Parameters
    ----------
    trace : BoundaryTrace
    init, src : InitialData, SourceTerm or None
    x : array_like, shape (2,)
    t : float
    cfg : QuadratureConfig, optional
    c : float
        Wave speed.
    form : {"auto", "first", "second"}
        ``"first"`` integrates space exactly and time numerically, ``"second"``
        does the reverse.  ``"auto"`` uses the second form for points further
        than two element sizes from the boundary.
    normalized : bool
        Return ``H(x)·u`` (value ``2π H u / 2π``) without dividing by the
        indicator.  By default the result is ``u`` itself, i.e. the raw sum
        divided by ``2π H(x)`` for points inside or on the boundary.

    Returns
    -------
    float
    """
    if t < 0:
        raise ValidationError("evaluation time must be non-negative")
    cfg = cfg or QuadratureConfig()
    init = init or InitialData()
    src = src or SourceTerm()
    mesh = trace.mesh
    x = np.asarray(x, dtype=float).reshape(2)
    if t == 0.0:
        raw = 0.0
        if init.u0 is not None:
            raw = float(init.u0(x[None])[0]) * 2.0 * math.pi * _support(init, mesh)(x)
        return _normalise(raw, 2.0 * math.pi, mesh, x, normalized, init)
    if form == "auto":
        form = "second" if mesh.distance(x) > 2.0 * mesh.h_max else "first"
    if form == "first":
        raw = float(_boundary_part_2d_first(trace, x[None], t, c, cfg.sing_order)[0])
    elif form == "second":
        raw = float(_boundary_part_2d_second(trace, x[None], t, c, 2 * cfg.gauss_order)[0])
    else:
        raise ValidationError(f"unknown form {form!r}")
    if not init.is_zero or not src.is_zero:
        raw += volume_terms(mesh, init, src, x, t, c, cfg)
    if init.u0 is not None:
        raw += _boundary_u0_term_2d(mesh, trace.u[0], x, t, c)
    return _normalise(raw, 2.0 * math.pi, mesh, x, normalized, init)


def _normalise(raw: float, full: float, mesh: BoundaryMesh, x, normalized: bool, init) -> float:
    if normalized:
        return raw / full
    Hx = DomainIndicator(mesh)(x)
    if Hx == 0.0:
        return raw / full
    return raw / (full * Hx)


# ---------------------------------------------------------------------------
# 3-D evaluation
# ---------------------------------------------------------------------------
def _boundary_part_3d(trace: BoundaryTrace, X, t: float, c: float, order: int) -> np.ndarray:
    edges, m = _time_windows(trace.grid, t)
    if m.size == 0:
        return np.zeros(len(X))
    mesh = trace.mesh
    X = np.asarray(X, dtype=float).reshape(-1, 3)
    sh = _shell_moments_3d(mesh, X, c * edges, order)  # (M, 6, P, N)
    dt = trace.grid.dt
    t_prev = dt * (m - 1)  # start of each trace interval
    q = trace.du_dn[m]
    ud = trace.u_dot[m]
    u_start = trace.u[m - 1]
    S0s, S0d, S1d, S0l = sh[:, 0], sh[:, 2], sh[:, 3], sh[:, 4]
    DB = (t - t_prev)[:, None, None] * S0d - S1d / c
    val = (
        np.einsum("mpn,mn->p", S0s, q)
        - np.einsum("mpn,mn->p", S0d, u_start)
        - np.einsum("mpn,mn->p", DB, ud)
        + np.einsum("mpn,mn->p", S0l, ud) / c
    )
    return val


def evaluate_3d(trace: BoundaryTrace, init: InitialData | None, src: SourceTerm | None, x, t: float,
                cfg: QuadratureConfig | None = None, c: float = 1.0, normalized: bool = False) -> float:
    """Field value from the 3-D retarded representation.

    See :func:`evaluate_2d` for the meaning of ``normalized``.
    """
    if t < 0:
        raise ValidationError("evaluation time must be non-negative")
    cfg = cfg or QuadratureConfig()
    init = init or InitialData()
    src = src or SourceTerm()
    mesh = trace.mesh
    x = np.asarray(x, dtype=float).reshape(3)
    if t == 0.0:
        raw = 0.0
        if init.u0 is not None:
            raw = float(init.u0(x[None])[0]) * 4.0 * math.pi * _support(init, mesh)(x)
        return _normalise(raw, 4.0 * math.pi, mesh, x, normalized, init)
    raw = float(_boundary_part_3d(trace, x[None], t, c, cfg.sing_order)[0])
    if not init.is_zero or not src.is_zero:
        raw += volume_terms(mesh, init, src, x, t, c, cfg)
    if init.u0 is not None:
        raw += boundary_u0_term_3d(mesh, trace.u[0], x, t, c)
    return _normalise(raw, 4.0 * math.pi, mesh, x, normalized, init)


def evaluate_series(trace: BoundaryTrace, X, c: float = 1.0, cfg: QuadratureConfig | None = None,
                    init: InitialData | None = None, src: SourceTerm | None = None,
                    steps=None) -> np.ndarray:
    """Field values at points ``X`` at grid times ``t_k``.

    Uses lag matrices, so the cost is one assembly per point plus a discrete
    convolution.  Values are divided by the indicator like :func:`evaluate_2d`.

    Parameters
    ----------
    steps : array_like of int, optional
        Grid indices to return (default: all ``0..n_steps``).  Initial-data
        and source terms are only computed at these steps.

    Returns
    -------
    ndarray, shape (n_points, len(steps))
    """
    cfg = cfg or QuadratureConfig()
    init = init or InitialData()
    src = src or SourceTerm()
    mesh = trace.mesh
    X = np.asarray(X, dtype=float).reshape(-1, mesh.dim)
    K = trace.grid.n_steps
    dt = trace.grid.dt
    raw = np.zeros((len(X), K + 1))
    if mesh.dim == 2:
        P, D = lag_operators_2d(mesh, X, c, dt, K, cfg.sing_order)
        for k in range(1, K + 1):
            m = np.arange(k, 0, -1)
            raw[:, k] = c * (np.einsum("lpn,ln->p", P[:k], trace.du_dn[m])
                             + np.einsum("lpn,ln->p", D[:k], trace.u_dot[m]))
        full = 2.0 * math.pi
    elif mesh.dim == 3:
        ops = lag_operators_3d(mesh, X, c, dt, None, cfg.sing_order)
        E = ops.E
        for k in range(1, K + 1):
            L = min(k, ops.n_lags)
            m = np.arange(k, k - L, -1)
            raw[:, k] = (np.einsum("lpn,ln->p", ops.SL[:L], trace.du_dn[m])
                         - np.einsum("lpn,ln->p", ops.DA[:L], trace.u[m - 1])
                         + np.einsum("lpn,ln->p", E[:L], trace.u_dot[m]))
        full = 4.0 * math.pi
    else:
        raise ValidationError("evaluate_series supports dim 2 and 3")
    times = trace.grid.times
    steps = np.arange(K + 1) if steps is None else np.asarray(steps, dtype=int).reshape(-1)
    if steps.size and (steps.min() < 0 or steps.max() > K):
        raise ValidationError("requested steps lie outside the trace grid")
    for p, x in enumerate(X):
        if init.u0 is not None and 0 in steps:
            raw[p, 0] = float(init.u0(x[None])[0]) * full * _support(init, mesh)(x)
        for k in steps:
            if k == 0:
                continue
            if not init.is_zero or not src.is_zero:
                raw[p, k] += volume_terms(mesh, init, src, x, times[k], c, cfg)
            if init.u0 is not None:
                if mesh.dim == 2:
                    raw[p, k] += _boundary_u0_term_2d(mesh, trace.u[0], x, times[k], c)
                else:
                    raw[p, k] += boundary_u0_term_3d(mesh, trace.u[0], x, times[k], c)
    ind = DomainIndicator(mesh).many(X)
    scale = np.where(ind > 0, full * ind, full)
    return raw[:, steps] / scale[:, None]


# ---------------------------------------------------------------------------
# pure Cauchy problems
# ---------------------------------------------------------------------------
def cauchy_2d(init: InitialData, x, t: float, c: float, order: int = 64) -> float:
    """Poisson formula: free-space 2-D solution from initial data."""
    x = np.asarray(x, dtype=float).reshape(2)
    if t == 0:
        return float(init.u0(x[None])[0]) if init.u0 is not None else 0.0
    ind = init.support
    total = 0.0
    if init.u0_dot is not None:
        total += disk_volume_integral_2d(x, t, c, init.u0_dot, ind, order)
    if init.u0 is not None:
        total += _fd_time(lambda s: disk_volume_integral_2d(x, s, c, init.u0, ind, order), t, 1e-3 * t)
    return total / (2.0 * math.pi)


def cauchy_3d(init: InitialData, x, t: float, c: float, order: int = 64) -> float:
    """Kirchhoff formula: free-space 3-D solution from initial data."""
    x = np.asarray(x, dtype=float).reshape(3)
    if t == 0:
        return float(init.u0(x[None])[0]) if init.u0 is not None else 0.0
    ind = init.support
    total = 0.0
    if init.u0_dot is not None:
        total += sphere_slice_integral(x, t, c, init.u0_dot, ind, order)
    if init.u0 is not None:
        total += _fd_time(lambda s: sphere_slice_integral(x, s, c, init.u0, ind, order), t, 1e-3 * t)
    return total / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# 1-D
# ---------------------------------------------------------------------------
def _interval_indicator(a1: float, a2: float, s: float) -> float:
    tol = 1e-12 * (a2 - a1)
    if abs(s - a1) <= tol or abs(s - a2) <= tol:
        return 0.5
    return 1.0 if a1 < s < a2 else 0.0


def _step(s: float) -> float:
    return 1.0 if s > 0 else (0.5 if s == 0 else 0.0)


def initial_terms_1d(init: InitialData, a1: float, a2: float, x: float, t: float, c: float) -> float:
    """d'Alembert part of ``2 H u``: translates of ``u₀`` and the ``u̇₀`` window."""
    total = 0.0
    if init.u0 is not None:
        for s in (x + c * t, x - c * t):
            w = _interval_indicator(a1, a2, s)
            if w:
                total += w * float(init.u0(np.array([[s]]))[0])
    if init.u0_dot is not None and t > 0:
        lo, hi = max(a1, x - c * t), min(a2, x + c * t)
        if hi > lo:
            f = lambda y: float(init.u0_dot(np.array([[y]]))[0])
            val, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += val / c
    return total


def evaluate_1d(trace: EndpointHistory, init: InitialData | None, x: float, t: float, c: float,
                normalized: bool = False) -> float:
    """Field value on ``[a1, a2]`` from endpoint histories and initial data."""
    init = init or InitialData()
    a1, a2 = trace.a1, trace.a2
    x = float(np.asarray(x, dtype=float).reshape(-1)[0])
    if t < 0:
        raise ValidationError("evaluation time must be non-negative")
    d1, d2 = abs(x - a1), abs(x - a2)
    raw = 0.0
    H1, H2 = _step(c * t - d1), _step(c * t - d2)
    if H2:
        raw += c * H2 * trace.flux_integral(t - d2 / c, 1)
        raw -= np.sign(x - a2) * H2 * trace.u_at(t - d2 / c, 1)
    if H1:
        raw -= c * H1 * trace.flux_integral(t - d1 / c, 0)
        raw += np.sign(x - a1) * H1 * trace.u_at(t - d1 / c, 0)
    raw += initial_terms_1d(init, a1, a2, x, t, c)
    Hx = _interval_indicator(a1, a2, x)
    if normalized or Hx == 0.0:
        return raw / 2.0
    return raw / (2.0 * Hx)
