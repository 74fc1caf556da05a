"""Quadrature rules for the singular and retarded integrals of the wave kernels.

Three classes of integrals appear in the representation formulas:

* weakly singular time integrals with weight ``1/√(c²τ² - r²)``,
* principal-value surface integrals of the double-layer kernels,
* retarded integrals over boundary elements, spheres ``|y - x| = ct`` and
  disks ``|y - x| < ct``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import element_integrals as ei
from .errors import HistoryUnderflowError, ValidationError
from .geometry import BoundaryMesh, DomainIndicator, point_segment_distance

logger = logging.getLogger(__name__)

__all__ = [
    "TimeGrid",
    "QuadratureConfig",
    "weakly_singular_time_integral",
    "pv_boundary_integral",
    "retarded_surface_integral_3d",
    "sphere_slice_integral",
    "disk_volume_integral_2d",
    "triangle_rule",
    "segment_rule",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid ``t_k = k·dt`` for ``k = 0..n_steps``."""

    dt: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"time step must be positive, got {self.dt!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValidationError(f"n_steps must be a positive integer, got {self.n_steps!r}")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def t_end(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature orders and principal-value exclusion radius.

    Attributes
    ----------
    gauss_order : int
        Gauss points per direction on regular elements and smooth pieces.
    sing_order : int
        Points per piece for rules with singular or kinked integrands.
    pv_radius_factor : float
        Radius of the ball excluded around a collocation point in principal
        value integrals, relative to the smallest element size.  Element
        integrals are exact, so a tiny radius gives the principal value
        itself.
    """

    gauss_order: int = 8
    sing_order: int = 8
    pv_radius_factor: float = 1e-6

    def __post_init__(self) -> None:
        if self.gauss_order < 2 or self.sing_order < 2:
            raise ValidationError("quadrature orders must be >= 2")
        if not self.pv_radius_factor > 0:
            raise ValidationError("pv_radius_factor must be positive")

    def pv_radius(self, mesh: BoundaryMesh) -> float:
        return self.pv_radius_factor * mesh.h_min


# ---------------------------------------------------------------------------
def weakly_singular_time_integral(
    f: Callable, r: float, t: float, c: float, order: int = 16, breakpoints=None
) -> float:
    """``∫_{r/c}^{t} f(τ) dτ / √(c²τ² - r²)``.

    The substitution ``τ = (r/c) cosh θ`` turns the weight into ``dθ/c`` and
    Gauss-Legendre is applied in ``θ``.  ``breakpoints`` are times where ``f``
    is not smooth; the ``θ`` range is split there.

    For ``r = 0`` the integral is ``∫_0^t f(τ)/(cτ) dτ`` and requires ``f(0) = 0``.
    """
    if t <= 0 or r >= c * t:
        return 0.0
    x, w = ei.gauss_legendre(order)
    if r == 0.0:
        f0 = float(np.asarray(f(np.array([0.0])))[0])
        if f0 != 0.0:
            raise ValidationError("integral diverges at r = 0 unless f(0) = 0")
        cuts = [0.0] + sorted(b for b in (breakpoints or []) if 0.0 < b < t) + [t]
        tot = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            tau = a + (b - a) * x
            tot += float(np.sum(w * (b - a) * np.asarray(f(tau)) / (c * tau)))
        return tot
    th_end = float(np.arccosh(c * t / r))
    cuts = [0.0]
    for b in sorted(breakpoints or []):
        if r / c < b < t:
            cuts.append(float(np.arccosh(c * b / r)))
    cuts.append(th_end)
    tot = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        th = a + (b - a) * x
        tau = (r / c) * np.cosh(th)
        tot += float(np.sum(w * (b - a) * np.asarray(f(tau)))) / c
    return tot


# ---------------------------------------------------------------------------
def _nearest_element(mesh: BoundaryMesh, x: np.ndarray) -> float:
    return mesh.distance(x)


def pv_boundary_integral(
    mesh: BoundaryMesh,
    x,
    density,
    kernel_kind: str,
    cfg: QuadratureConfig | None = None,
    t: float | None = None,
    c: float = 1.0,
) -> float:
    """Principal-value integral of a double-layer kernel at a boundary point.

    Parameters
    ----------
    mesh : BoundaryMesh
    x : array_like
        Point on the boundary (typically an element centroid).
    density : array_like, shape (n_elems,)
        Piecewise-constant density.
    kernel_kind : {"inv_r_drdn_2d", "d_invr_dn_3d"}
        ``(1/r)(∂r/∂n)`` on polygons or ``∂(1/r)/∂n`` on triangulations.
    cfg : QuadratureConfig, optional
        Supplies the exclusion radius.
    t, c : float, optional
        Restrict the integral to the retarded set ``|y - x| < ct``.

    Notes
    -----
    Element integrals are evaluated in closed form on the set
    ``ε < |y - x| < ct``; the flat self element contributes exactly zero.
    """
    cfg = cfg or QuadratureConfig()
    x = np.asarray(x, dtype=float).reshape(mesh.dim)
    density = np.asarray(density, dtype=float).reshape(mesh.n_elements)
    if _nearest_element(mesh, x) > 1e3 * mesh.geom_tol:
        raise ValidationError("pv_boundary_integral needs a point on the boundary")
    eps = cfg.pv_radius(mesh)
    r_out = np.inf if t is None else c * t
    if kernel_kind == "inv_r_drdn_2d":
        if mesh.dim != 2:
            raise ValidationError("inv_r_drdn_2d needs a 2-D mesh")
        s1, s2, h = ei.segment_frames(mesh.vertices, mesh.normals, x[None])
        vals = ei.segment_static_dipole(s1, s2, h, eps, r_out)[0]
    elif kernel_kind == "d_invr_dn_3d":
        if mesh.dim != 3:
            raise ValidationError("d_invr_dn_3d needs a 3-D mesh")
        n = mesh.n_elements
        X = np.broadcast_to(x, (n, 3))
        mom = ei.triangle_moments(X, mesh.vertices, mesh.normals, np.full(n, r_out))[2]
        mom_in = ei.triangle_moments(X, mesh.vertices, mesh.normals, np.full(n, eps))[2]
        vals = mom - mom_in
    else:
        raise ValidationError(f"unknown kernel_kind {kernel_kind!r}")
    return float(np.dot(vals, density))


# ---------------------------------------------------------------------------
def segment_rule(order: int):
    """Gauss-Legendre rule on ``[0, 1]`` (parameter along a segment)."""
    return ei.gauss_legendre(order)


def triangle_rule(order: int):
    """Collapsed Gauss product rule on the reference triangle.

    Returns
    -------
    bary : ndarray, shape (order², 3)
        Barycentric coordinates.
    w : ndarray, shape (order²,)
        Weights summing to 1 (multiply by the triangle area).
    """
    x, w = ei.gauss_legendre(order)
    u = x[:, None]
    v = x[None, :] * (1.0 - u)
    wt = (w[:, None] * w[None, :]) * (1.0 - u) * 2.0  # sums to 1 over the unit triangle
    l1 = np.broadcast_to(u, (order, order)).ravel()
    l2 = v.ravel()
    bary = np.column_stack([1.0 - l1 - l2, l1, l2])
    return bary, wt.ravel()


_WEIGHTS_3D = ("1/r", "dln r/dn", "d(1/r)/dn")


def retarded_surface_integral_3d(
    mesh: BoundaryMesh,
    x,
    t: float,
    c: float,
    trace: Callable,
    weight: str = "1/r",
    order: int = 8,
    history_start: float = 0.0,
) -> float:
    """``∫_{S_t(x)} k(x, y) f(y, t - r/c) dS`` by Gauss quadrature on triangles.

    Quadrature points outside the cone ``r < ct`` are dropped.

    Parameters
    ----------
    trace : callable
        ``trace(y, s)`` with ``y`` of shape (m, 3) and ``s`` of shape (m,).
    weight : {"1/r", "dln r/dn", "d(1/r)/dn"}
    history_start : float
        Earliest time at which ``trace`` is defined.
    """
    if weight not in _WEIGHTS_3D:
        raise ValidationError(f"weight must be one of {_WEIGHTS_3D}")
    if mesh.dim != 3:
        raise ValidationError("retarded_surface_integral_3d needs a 3-D mesh")
    if t <= 0:
        return 0.0
    x = np.asarray(x, dtype=float).reshape(3)
    bary, w = triangle_rule(order)
    Y = np.einsum("qv,evk->eqk", bary, mesh.vertices)  # (E, q, 3)
    d = Y - x
    r = np.linalg.norm(d, axis=2)
    inside = (r < c * t) & (r > 0.0)
    if not np.any(inside):
        return 0.0
    hn = np.einsum("eqk,ek->eq", d, mesh.normals)
    rs = np.where(inside, r, 1.0)
    if weight == "1/r":
        k = 1.0 / rs
    elif weight == "dln r/dn":
        k = hn / rs**2
    else:
        k = -hn / rs**3
    s = t - r[inside] / c
    if np.any(s < history_start):
        raise HistoryUnderflowError("retarded time precedes the stored history")
    f = np.zeros_like(r)
    f[inside] = np.asarray(trace(Y[inside], s), dtype=float)
    return float(np.sum(k * f * w[None, :] * mesh.measures[:, None] * inside))


# ---------------------------------------------------------------------------
def _indicator_values(indicator, pts: np.ndarray) -> np.ndarray:
    if indicator is None:
        return np.ones(len(pts))
    if isinstance(indicator, DomainIndicator):
        return indicator.many(pts)
    return np.asarray(indicator(pts), dtype=float)


def sphere_slice_integral(x, t: float, c: float, g: Callable | None, indicator=None, order: int = 32) -> float:
    """``∫_{|y-x|=ct} g(y) H(y) dS / (c² t)``.

    Gauss-Legendre in ``cos θ`` times the trapezoid rule in ``φ``.  When the
    sphere crosses the boundary the integrand jumps and the rule is only first
    order in ``order``.

    For ``g=None`` (``g ≡ 1``) with a triangulated :class:`DomainIndicator` the
    result is exact: the area of the sphere inside the domain equals ``R²``
    times the solid angle of the boundary part outside the ball.

    Parameters
    ----------
    g : callable or None
        Vectorised over points of shape (m, 3).
    indicator : DomainIndicator or callable or None
        Domain indicator ``H``; ``None`` means the whole space.
    """
    if t <= 0:
        return 0.0
    x = np.asarray(x, dtype=float).reshape(3)
    rad = c * t
    if g is None and isinstance(indicator, DomainIndicator) and indicator.mesh.dim == 3:
        mesh = indicator.mesh
        n = mesh.n_elements
        X = np.broadcast_to(x, (n, 3))
        near = ei.triangle_moments(X, mesh.vertices, mesh.normals, np.full(n, rad))[2]
        full = ei.triangle_moments(X, mesh.vertices, mesh.normals, np.full(n, np.inf))[2]
        solid_far = float(np.sum(near - full))
        return rad * rad * solid_far / (c * c * t)
    mu, wm = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    st = np.sqrt(1.0 - mu**2)
    dirs = np.stack(
        [
            st[:, None] * np.cos(phi)[None, :],
            st[:, None] * np.sin(phi)[None, :],
            np.broadcast_to(mu[:, None], (order, nphi)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    pts = x + rad * dirs
    wt = np.repeat(wm, nphi) * (2.0 * np.pi / nphi) * rad**2
    val = np.ones(len(pts)) if g is None else np.asarray(g(pts), dtype=float)
    val = val * _indicator_values(indicator, pts)
    return float(np.sum(wt * val)) / (c * c * t)


def disk_volume_integral_2d(x, t: float, c: float, g: Callable | None, indicator=None, order: int = 32) -> float:
    """``∫_{|y-x|<ct} g(y) H(y) dV / (c √(c²t² - r²))``.

    With ``r = ct·sin φ`` the weight becomes ``t·sin φ dφ dθ``.  ``g=None``
    means ``g ≡ 1``.

    When ``indicator`` is a :class:`DomainIndicator` of a polygon the rays
    from ``x`` are cut exactly at the polygon, and the angular range is split
    where the integrand has kinks, so the rule stays high order even when the
    disk crosses the boundary.  Otherwise Gauss-Legendre in ``φ ∈ [0, π/2]``
    is combined with the trapezoid rule in ``θ``.
    """
    if t <= 0:
        return 0.0
    x = np.asarray(x, dtype=float).reshape(2)
    if isinstance(indicator, DomainIndicator) and indicator.mesh.dim == 2:
        return _disk_polygon(x, t, c, g, indicator.mesh, order)
    xg, wg = ei.gauss_legendre(order)
    ph = 0.5 * np.pi * xg
    wp = 0.5 * np.pi * wg
    nth = 2 * order
    th = 2.0 * np.pi * np.arange(nth) / nth
    r = c * t * np.sin(ph)
    pts = x + np.stack(
        [r[:, None] * np.cos(th)[None, :], r[:, None] * np.sin(th)[None, :]], axis=-1
    ).reshape(-1, 2)
    wt = np.repeat(wp * t * np.sin(ph), nth) * (2.0 * np.pi / nth)
    val = (np.ones(len(pts)) if g is None else np.asarray(g(pts), dtype=float))
    val = val * _indicator_values(indicator, pts)
    return float(np.sum(wt * val))


def _disk_polygon(x: np.ndarray, t: float, c: float, g, mesh: BoundaryMesh, order: int) -> float:
    R = c * t
    a = mesh.vertices[:, 0] - x
    b = mesh.vertices[:, 1] - x
    d = b - a
    tol = mesh.geom_tol
    # angular breakpoints: vertices and circle/segment intersections
    cuts = [np.arctan2(a[:, 1], a[:, 0])]
    A2 = np.einsum("ij,ij->i", d, d)
    B2 = 2.0 * np.einsum("ij,ij->i", a, d)
    C2 = np.einsum("ij,ij->i", a, a) - R * R
    disc = B2 * B2 - 4.0 * A2 * C2
    ok = disc > 0
    for sgn in (-1.0, 1.0):
        sr = (-B2[ok] + sgn * np.sqrt(disc[ok])) / (2.0 * A2[ok])
        inside = (sr > 0) & (sr < 1)
        pt = a[ok][inside] + sr[inside, None] * d[ok][inside]
        cuts.append(np.arctan2(pt[:, 1], pt[:, 0]))
    cut = np.unique(np.mod(np.concatenate(cuts), 2.0 * np.pi))
    cut = np.concatenate([cut, [cut[0] + 2.0 * np.pi]]) if len(cut) else np.array([0.0, 2.0 * np.pi])
    width = np.diff(cut)
    keep = width > 1e-15
    lo, width = cut[:-1][keep], width[keep]
    n_ang = max(4, order // 4)
    xa, wa = ei.gauss_legendre(n_ang)
    th = (lo[:, None] + width[:, None] * xa).ravel()
    wth = (width[:, None] * wa).ravel()
    om = np.column_stack([np.cos(th), np.sin(th)])
    # ray/segment crossings: ρ ω = a + s d
    cr_od = om[:, None, 0] * d[None, :, 1] - om[:, None, 1] * d[None, :, 0]
    cr_ad = a[None, :, 0] * d[None, :, 1] - a[None, :, 1] * d[None, :, 0]
    cr_ao = a[None, :, 0] * om[:, None, 1] - a[None, :, 1] * om[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = cr_ad / cr_od
        sp = cr_ao / cr_od
    hit = (np.abs(cr_od) > 0) & (sp >= 0) & (sp < 1) & (rho > 0) & (rho < R)
    # segments through x cross every ray at ρ = 0
    on_seg = point_segment_distance(x, mesh.vertices[:, 0], mesh.vertices[:, 1]) <= tol
    rho[:, on_seg] = 0.0
    hit[:, on_seg] = True
    side = -np.sign(om @ mesh.normals.T)  # +1 entering the domain
    # from a boundary point the indicator starts at 1 on inward rays, 0 otherwise
    side[:, on_seg] = np.maximum(side[:, on_seg], 0.0)
    H0 = indicator_value = DomainIndicator(mesh)(x)
    if indicator_value == 0.5:
        H0 = 0.0  # the crossing at ρ = 0 is one of the hits
    ti, sj = np.nonzero(hit)
    rho_all = np.concatenate([np.zeros(len(th)), rho[ti, sj]])
    sgn_all = np.concatenate([np.full(len(th), H0), side[ti, sj]])
    th_all = np.concatenate([np.arange(len(th)), ti])
    if g is None:
        tail = np.sqrt(np.maximum(R * R - rho_all**2, 0.0)) / c
    else:
        xg, wg = ei.gauss_legendre(order)
        ph0 = np.arcsin(np.clip(rho_all / R, 0.0, 1.0))
        span = 0.5 * np.pi - ph0
        ph = ph0[:, None] + span[:, None] * xg
        rr = R * np.sin(ph)
        pts = x + rr[..., None] * om[th_all][:, None, :]
        gv = np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(ph.shape)
        tail = t * np.einsum("ij,ij->i", gv * np.sin(ph), span[:, None] * wg)
    per_ray = np.bincount(th_all, weights=sgn_all * tail, minlength=len(th))
    return float(np.dot(wth, per_ray))
