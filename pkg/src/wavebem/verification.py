"""Independent correctness checks built from exact identities of the wave equation.

* dynamic Gauss identities in 2-D and 3-D (geometric, independent of any
  solution),
* Hadamard jump conditions and energy jump relations across wave fronts,
* global energy and Lagrangian balances.

Conventions: the field equation is ``Δu - c⁻² u_tt = G``; jumps across a
front are ``[f] = f(behind) - f(ahead)`` where ``n`` is the direction of
propagation, so "behind" is ``p - εn``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import element_integrals as ei
from .errors import ValidationError
from .geometry import BoundaryMesh, DomainIndicator
from .quadrature import QuadratureConfig, disk_volume_integral_2d, sphere_slice_integral, triangle_rule
from .representation import BoundaryTrace

logger = logging.getLogger(__name__)

__all__ = [
    "FrontGeometry",
    "EnergyDensities",
    "JumpResidual",
    "EnergyJumpResidual",
    "gauss_residual_2d",
    "gauss_residual_3d",
    "static_gauss_3d",
    "hadamard_jump_check",
    "front_energy_jump_check",
    "energy_balance_residual",
    "lagrangian_balance_residual",
    "volume_rule",
]

Sampler = Callable[[np.ndarray, float], tuple]
"""``f(points, t) -> (u, u_dot, grad_u)`` with shapes (m,), (m,), (m, dim)."""


# ---------------------------------------------------------------------------
# fronts
# ---------------------------------------------------------------------------
def check_spacetime_normal(nu, tol: float = 1e-12) -> np.ndarray:
    """Validate a space-time normal ``(ν_1..ν_N, ν_τ)`` of a characteristic front.

    Requires ``ν_τ < 0`` and ``ν_τ² = Σ ν_j²`` within ``tol`` (relative to
    ``|ν|²``), which is equivalent to unit front speed in ``τ = ct``.
    """
    nu = np.atleast_2d(np.asarray(nu, dtype=float))
    if nu.shape[1] < 2 or not np.all(np.isfinite(nu)):
        raise ValidationError("space-time normal must be finite with at least two components")
    tau = nu[:, -1]
    spatial = np.einsum("ij,ij->i", nu[:, :-1], nu[:, :-1])
    if np.any(tau >= 0.0):
        raise ValidationError("space-time normal must have a negative time component")
    scale = tau**2 + spatial
    if np.any(np.abs(tau**2 - spatial) > tol * scale):
        raise ValidationError("space-time normal is not characteristic")
    if np.any(np.abs(1.0 + tau / np.sqrt(spatial)) > tol):
        raise ValidationError("space-time normal does not give unit front speed")
    return nu


@dataclass(frozen=True)
class FrontGeometry:
    """Analytically supplied wave front.

    Parameters
    ----------
    position : callable
        ``position(t)`` returns sample points on the front, shape (m, dim).
    normal : callable
        ``normal(points, t)`` returns unit propagation directions (m, dim).
    c : float
        Claimed front speed used by the checks.
    nu : array_like, optional
        Explicit space-time normals to validate; otherwise they are built as
        ``(n, -1)/√2``.
    """

    position: Callable
    normal: Callable
    c: float = 1.0
    nu: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValidationError("front speed must be positive")
        if self.nu is not None:
            object.__setattr__(self, "nu", check_spacetime_normal(self.nu))

    def samples(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        p = np.atleast_2d(np.asarray(self.position(t), dtype=float))
        n = np.atleast_2d(np.asarray(self.normal(p, t), dtype=float))
        norms = np.linalg.norm(n, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValidationError("front normals must be unit vectors")
        return p, n

    def spacetime_normals(self, t: float) -> np.ndarray:
        _, n = self.samples(t)
        nu = np.hstack([n, -np.ones((len(n), 1))]) / math.sqrt(2.0)
        return check_spacetime_normal(nu)


@dataclass(frozen=True)
class EnergyDensities:
    """``E = ½(u_τ² + |∇u|²)`` and ``L = ½(u_τ² - |∇u|²)`` with ``u_τ = u_t / c``."""

    E: np.ndarray
    L: np.ndarray

    @classmethod
    def from_field(cls, u_dot, grad, c: float) -> "EnergyDensities":
        ut = np.asarray(u_dot, dtype=float) / c
        g2 = np.sum(np.asarray(grad, dtype=float) ** 2, axis=-1)
        return cls(E=0.5 * (ut**2 + g2), L=0.5 * (ut**2 - g2))


@dataclass(frozen=True)
class JumpResidual:
    """Largest jump residuals over the front samples.

    ``value``: ``|[u]|``; ``compat``: ``|[u̇ + c n·∇u]|``; ``tangential``:
    ``|[u̇ n + c ∇u]|``; ``quiescent``: ``|n·∇u + u̇/c|`` behind the front
    (only when requested).
    """

    value: float
    compat: float
    tangential: float
    quiescent: float | None = None
    inconclusive: bool = False


@dataclass(frozen=True)
class EnergyJumpResidual:
    """Residuals of the energy jump relations across a front.

    ``energy``: ``[E] + c⁻¹[u̇ ∂u/∂n]``; ``lagrangian``:
    ``[L] - c⁻²[u̇](u̇⁻ + c ∂u⁻/∂n)`` with ``-`` the side ahead of the front;
    ``lagrangian_jump``: ``|[L]|``.
    """

    energy: float
    lagrangian: float
    lagrangian_jump: float
    inconclusive: bool = False


def _one_sided(field: Sampler, p: np.ndarray, n: np.ndarray, t: float, eps: float, side: float):
    """Richardson-extrapolated limits at ``p`` from the side ``p + side·ε n``."""
    u1, v1, g1 = (np.asarray(a, dtype=float) for a in field(p + side * eps * n, t))
    u2, v2, g2 = (np.asarray(a, dtype=float) for a in field(p + side * 2 * eps * n, t))
    lim = (2 * u1 - u2, 2 * v1 - v2, 2 * g1 - g2)
    spread = max(np.abs(u1 - u2).max(), np.abs(v1 - v2).max(), np.abs(g1 - g2).max())
    return lim, spread


def _front_limits(field: Sampler, front: FrontGeometry, t: float, eps: float | None):
    p, n = front.samples(t)
    if eps is None:
        scale = max(1.0, float(np.abs(p).max()))
        eps = 10.0 * 1e-9 * scale
    behind, s_b = _one_sided(field, p, n, t, eps, -1.0)
    ahead, s_a = _one_sided(field, p, n, t, eps, +1.0)
    vals = np.concatenate([np.ravel(a) for a in behind + ahead])
    # the offsets must see smooth one-sided behaviour: a limit that still moves
    # by O(1) between ε and 2ε means the front is not where it was claimed
    scale = max(1.0, float(np.abs(vals).max())) if vals.size else 1.0
    inconclusive = (not np.all(np.isfinite(vals))) or max(s_b, s_a) > 1e-3 * scale
    return p, n, behind, ahead, inconclusive


def hadamard_jump_check(field: Sampler, front: FrontGeometry, t: float, eps: float | None = None,
                        quiescent_ahead: bool = False) -> JumpResidual:
    """Jump residuals of the Hadamard continuity and compatibility conditions.

    Parameters
    ----------
    field : callable
        ``field(points, t) -> (u, u_dot, grad_u)``.
    front : FrontGeometry
    t : float
    eps : float, optional
        Sampling offset; defaults to ``10·δ`` with ``δ = 1e-9·max(1, |p|)``.
    quiescent_ahead : bool
        Also check ``n·∇u = -u̇/c`` just behind the front.
    """
    p, n, (ub, vb, gb), (ua, va, ga), bad = _front_limits(field, front, t, eps)
    c = front.c
    ju, jv, jg = ub - ua, vb - va, gb - ga
    value = float(np.abs(ju).max())
    compat = float(np.abs(jv + c * np.einsum("ij,ij->i", n, jg)).max())
    tangential = float(np.linalg.norm(jv[:, None] * n + c * jg, axis=1).max())
    quiet = None
    if quiescent_ahead:
        quiet = float(np.abs(np.einsum("ij,ij->i", n, gb) + vb / c).max())
    return JumpResidual(value, compat, tangential, quiet, bool(bad))


def front_energy_jump_check(field: Sampler, front: FrontGeometry, t: float,
                            eps: float | None = None) -> EnergyJumpResidual:
    """Residuals of the energy and Lagrangian jump relations across a front."""
    p, n, (ub, vb, gb), (ua, va, ga), bad = _front_limits(field, front, t, eps)
    c = front.c
    Eb, Ea = EnergyDensities.from_field(vb, gb, c), EnergyDensities.from_field(va, ga, c)
    dn_b = np.einsum("ij,ij->i", n, gb)
    dn_a = np.einsum("ij,ij->i", n, ga)
    jE = Eb.E - Ea.E
    jL = Eb.L - Ea.L
    jv = vb - va
    energy = float(np.abs(jE + (vb * dn_b - va * dn_a) / c).max())
    lagr = float(np.abs(jL - jv * (va + c * dn_a) / c**2).max())
    return EnergyJumpResidual(energy, lagr, float(np.abs(jL).max()), bool(bad))


# ---------------------------------------------------------------------------
# Gauss identities
# ---------------------------------------------------------------------------
def _fd_step(t: float, fd_step: float | None) -> float:
    return fd_step if fd_step is not None else 1e-3 * t


def gauss_residual_2d(mesh: BoundaryMesh, x, t: float, c: float = 1.0, cfg: QuadratureConfig | None = None,
                      fd_step: float | None = None) -> float:
    """Residual of the dynamic 2-D Gauss identity.

    ``PV∫_{S_t} (1 - (r/ct)²)^{-1/2} (1/r)(∂r/∂n) dS``
    ``+ ∂_t ∫_{Ω ∩ {r<ct}} dV / (c √(c²t² - r²)) - 2π H(x)``.

    The boundary term is integrated exactly per segment and the time
    derivative of the disk term is a centred difference.
    """
    if mesh.dim != 2:
        raise ValidationError("gauss_residual_2d needs a 2-D mesh")
    if not t > 0:
        raise ValidationError("Gauss identities need t > 0")
    cfg = cfg or QuadratureConfig()
    x = np.asarray(x, dtype=float).reshape(1, 2)
    s1, s2, h = ei.segment_frames(mesh.vertices, mesh.normals, x)
    surf = c * float(np.sum(ei.segment_B(s1, s2, h, c * t, c)))
    ind = DomainIndicator(mesh)
    order = max(4 * cfg.gauss_order, 32)
    dh = _fd_step(t, fd_step)
    disk = lambda s: disk_volume_integral_2d(x[0], s, c, None, ind, order)
    vol = (disk(t + dh) - disk(t - dh)) / (2 * dh) if t > dh else (disk(t + dh) - disk(t)) / dh
    return surf + vol - 2.0 * math.pi * ind(x[0])


def _moment_sum(mesh: BoundaryMesh, x: np.ndarray, R: float, which: int, order: int) -> float:
    n = mesh.n_elements
    X = np.broadcast_to(x, (n, 3))
    return float(np.sum(ei.triangle_moments(X, mesh.vertices, mesh.normals, np.full(n, R), order)[which]))


def static_gauss_3d(mesh: BoundaryMesh, x, cfg: QuadratureConfig | None = None) -> float:
    """``∮ (1/r²)(∂r/∂n) dS``: 4π inside, 2π on the boundary, 0 outside."""
    cfg = cfg or QuadratureConfig()
    x = np.asarray(x, dtype=float).reshape(3)
    return -_moment_sum(mesh, x, np.inf, 2, cfg.sing_order)


def gauss_residual_3d(mesh: BoundaryMesh, x, t: float, c: float = 1.0, cfg: QuadratureConfig | None = None,
                      fd_step: float | None = None, static: bool | None = None) -> float:
    """Residual of the dynamic 3-D Gauss identity.

    ``∫_{S_t} (1/r²)(∂r/∂n) dS + c⁻¹ ∂_t {∫_{r=ct} H/r dS + ∫_{S_t} (1/r)(∂r/∂n) dS}``
    ``- 4π H(x)``.

    Parameters
    ----------
    static : bool, optional
        Use the static limit ``∮ (1/r²)(∂r/∂n) dS - 4π H(x)``.  By default it
        is used once the sphere ``r = ct`` encloses the whole boundary, where
        both forms coincide.
    """
    if mesh.dim != 3:
        raise ValidationError("gauss_residual_3d needs a 3-D mesh")
    if not t > 0:
        raise ValidationError("Gauss identities need t > 0")
    cfg = cfg or QuadratureConfig()
    x = np.asarray(x, dtype=float).reshape(3)
    ind = DomainIndicator(mesh)
    target = 4.0 * math.pi * ind(x)
    reach = float(np.linalg.norm(mesh.nodes - x, axis=1).max())
    if static is None:
        static = c * t > reach
    if static:
        return static_gauss_3d(mesh, x, cfg) - target
    order = cfg.sing_order
    surf = -_moment_sum(mesh, x, c * t, 2, order)
    dh = _fd_step(t, fd_step)

    def bracket(s: float) -> float:
        if s <= 0:
            return 0.0
        sphere = c * sphere_slice_integral(x, s, c, None, ind)
        return sphere + _moment_sum(mesh, x, c * s, 4, order)

    if t > dh:
        vol = (bracket(t + dh) - bracket(t - dh)) / (2 * dh)
    else:
        vol = (bracket(t + dh) - bracket(t)) / dh
    return surf + vol / c - target


# ---------------------------------------------------------------------------
# energy balances
# ---------------------------------------------------------------------------
def _tet_rule(order: int):
    """Duffy-collapsed Gauss rule on the reference tetrahedron (weights sum to 1)."""
    x, w = ei.gauss_legendre(order)
    a, b, cc = np.meshgrid(x, x, x, indexing="ij")
    wa, wb, wc = np.meshgrid(w, w, w, indexing="ij")
    l1 = a
    l2 = a * b
    l3 = a * b * cc
    wt = 6.0 * wa * wb * wc * a**2 * b
    bary = np.column_stack([1.0 - l1.ravel(), (l1 - l2).ravel(), (l2 - l3).ravel(), l3.ravel()])
    return bary, wt.ravel()


def volume_rule(mesh: BoundaryMesh, order: int = 8, center=None) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points and weights over the domain enclosed by ``mesh``.

    The domain is split into a fan of simplices from ``center`` (default:
    mean of the nodes), so it must be star-shaped with respect to it.
    """
    if mesh.dim == 1:
        a1, a2 = float(mesh.nodes[:, 0].min()), float(mesh.nodes[:, 0].max())
        x, w = ei.gauss_legendre(order)
        return (a1 + (a2 - a1) * x)[:, None], (a2 - a1) * w
    ctr = np.asarray(center if center is not None else mesh.nodes.mean(axis=0), dtype=float)
    V = mesh.vertices
    if mesh.dim == 2:
        e1, e2 = V[:, 0] - ctr, V[:, 1] - ctr
        vol = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        bary, w = triangle_rule(order)
        simp = np.concatenate([np.broadcast_to(ctr, (len(V), 1, 2)), V], axis=1)
    else:
        e1, e2, e3 = V[:, 0] - ctr, V[:, 1] - ctr, V[:, 2] - ctr
        vol = np.einsum("ij,ij->i", e1, np.cross(e2, e3)) / 6.0
        bary, w = _tet_rule(order)
        simp = np.concatenate([np.broadcast_to(ctr, (len(V), 1, 3)), V], axis=1)
    if np.any(vol <= 0.0):
        raise ValidationError("domain is not star-shaped with respect to the fan center")
    pts = np.einsum("qv,evk->eqk", bary, simp).reshape(-1, mesh.dim)
    wts = (vol[:, None] * w[None, :]).ravel()
    return pts, wts


def _surface_rule(mesh: BoundaryMesh, order: int):
    if mesh.dim == 1:
        # endpoints with outward normals -1 and +1
        a1, a2 = float(mesh.nodes[:, 0].min()), float(mesh.nodes[:, 0].max())
        return np.array([[a1], [a2]]), np.array([1.0, 1.0]), np.array([[-1.0], [1.0]]), np.array([0, 1])
    if mesh.dim == 2:
        x, w = ei.gauss_legendre(order)
        bary = np.column_stack([1.0 - x, x])
    else:
        bary, w = triangle_rule(order)
    pts = np.einsum("qv,evk->eqk", bary, mesh.vertices).reshape(-1, mesh.dim)
    wts = (mesh.measures[:, None] * w[None, :]).ravel()
    nrm = np.repeat(mesh.normals, len(w), axis=0)
    elem = np.repeat(np.arange(mesh.n_elements), len(w))
    return pts, wts, nrm, elem


def _time_rule(t: float, n_time: int, order: int = 4):
    x, w = ei.gauss_legendre(order)
    edges = np.linspace(0.0, t, n_time + 1)
    ts = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
    ws = (np.diff(edges)[:, None] * w[None, :]).ravel()
    return ts, ws


def _trace_interval_values(trace: BoundaryTrace, s: float, elem: np.ndarray):
    """``(u, u̇, ∂u/∂n)`` of a boundary trace at time ``s`` per quadrature point."""
    k = int(np.clip(math.ceil(s / trace.grid.dt - 1e-12), 1, trace.grid.n_steps))
    frac = (s - (k - 1) * trace.grid.dt) / trace.grid.dt
    u = (1 - frac) * trace.u[k - 1] + frac * trace.u[k]
    return u[elem], trace.u_dot[k][elem], trace.du_dn[k][elem]


def _balance_parts(field: Sampler, mesh: BoundaryMesh, t: float, c: float, G, trace, n_time: int, order: int):
    """Terms of both balances; ``*_abs`` entries integrate absolute values."""
    Vp, Vw = volume_rule(mesh, order)
    Sp, Sw, Sn, elem = _surface_rule(mesh, order)
    ts, tw = _time_rule(t, n_time)
    names = ("bnd_E", "bnd_L", "src_E", "src_L", "L_int", "E_int")
    acc = {k: 0.0 for k in names}
    acc.update({k + "_abs": 0.0 for k in names[:4]})

    def add(key: str, ws: float, w: np.ndarray, vals: np.ndarray) -> None:
        acc[key] += ws * float(np.dot(w, vals))
        if key + "_abs" in acc:
            acc[key + "_abs"] += ws * float(np.dot(w, np.abs(vals)))

    for s, ws in zip(ts, tw):
        if trace is not None:
            ub, vb, pb = _trace_interval_values(trace, s, elem)
        else:
            ub, vb, gb = field(Sp, s)
            pb = np.einsum("ij,ij->i", np.asarray(gb).reshape(len(Sp), -1), Sn)
        add("bnd_E", ws, Sw, vb * pb)
        add("bnd_L", ws, Sw, ub * pb)
        uv, vv, gv = field(Vp, s)
        dens = EnergyDensities.from_field(vv, gv, c)
        add("L_int", ws, Vw, dens.L)
        add("E_int", ws, Vw, dens.E)
        if G is not None:
            gval = np.asarray(G(Vp, np.full(len(Vp), s)), dtype=float)
            add("src_E", ws, Vw, gval * vv)
            add("src_L", ws, Vw, gval * uv)
    u_t, v_t, g_t = field(Vp, t)
    u_0, v_0, g_0 = field(Vp, 0.0)
    acc["E_t"] = float(np.dot(Vw, EnergyDensities.from_field(v_t, g_t, c).E))
    acc["E_0"] = float(np.dot(Vw, EnergyDensities.from_field(v_0, g_0, c).E))
    acc["uu_t"] = float(np.dot(Vw, u_t * v_t))
    acc["uu_0"] = float(np.dot(Vw, u_0 * v_0))
    acc["uu_abs"] = float(np.dot(Vw, np.abs(u_t * v_t)) + np.dot(Vw, np.abs(u_0 * v_0)))
    return acc


def _normalized(lhs: float, rhs: float, scale: float) -> float:
    den = max(abs(lhs), abs(rhs), scale)
    return abs(lhs - rhs) / den if den > 0 else 0.0


def energy_balance_residual(field: Sampler, mesh: BoundaryMesh, t: float, c: float = 1.0, G=None,
                            trace: BoundaryTrace | None = None, n_time: int = 64, order: int = 8) -> float:
    """Normalised residual of the energy balance on ``[0, t]``.

    ``∫_Ω (E(t) - E(0)) dV = -∫∫ G u_t dV dt + ∫∫_S u̇ ∂u/∂n dS dt``.

    Parameters
    ----------
    field : callable
        ``field(points, t) -> (u, u_dot, grad_u)`` inside the domain.
    mesh : BoundaryMesh
        Boundary of a domain that is star-shaped about its node mean.
    G : callable, optional
        Source ``G(points, times)``.
    trace : BoundaryTrace, optional
        Boundary data for the power flux term (e.g. from a solver); by default
        the flux is taken from ``field``.


    Returns
    -------
    float
        ``|lhs - rhs|`` divided by the largest of ``|lhs|``, ``|rhs|`` and the
        magnitudes of the individual terms, so that balances whose sides
        cancel to zero stay meaningful.
    """
    if not t > 0:
        raise ValidationError("balance interval must have t > 0")
    parts = _balance_parts(field, mesh, t, c, G, trace, n_time, order)
    lhs = parts["E_t"] - parts["E_0"]
    rhs = -parts["src_E"] + parts["bnd_E"]
    scale = max(parts["E_t"], parts["E_0"], parts["bnd_E_abs"], parts["src_E_abs"])
    return _normalized(lhs, rhs, scale)


def lagrangian_balance_residual(field: Sampler, mesh: BoundaryMesh, t: float, c: float = 1.0, G=None,
                                trace: BoundaryTrace | None = None, n_time: int = 64, order: int = 8) -> float:
    """Normalised residual of the Lagrangian balance on ``[0, t]``.

    ``2 ∫∫ L dV dt = ∫∫ u G dV dt - ∫∫_S u ∂u/∂n dS dt``
    ``+ c⁻² ∫_Ω (u u̇|_t - u₀ u̇₀) dV``.

    Normalised like :func:`energy_balance_residual`; the term magnitudes
    include ``2 ∫∫ E dV dt``.
    """
    if not t > 0:
        raise ValidationError("balance interval must have t > 0")
    parts = _balance_parts(field, mesh, t, c, G, trace, n_time, order)
    lhs = 2.0 * parts["L_int"]
    rhs = parts["src_L"] - parts["bnd_L"] + (parts["uu_t"] - parts["uu_0"]) / c**2
    scale = max(2.0 * parts["E_int"], parts["bnd_L_abs"], parts["src_L_abs"], parts["uu_abs"] / c**2)
    return _normalized(lhs, rhs, scale)
