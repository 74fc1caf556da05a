"""Closed-form solutions of the homogeneous wave equation used as ground truth.

Every oracle exposes ``eval(x, t) -> (u, u_dot, grad_u)`` vectorised over
points ``x`` of shape (m, dim).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy import integrate, special

from .errors import ValidationError

__all__ = [
    "Profile",
    "OracleSolution",
    "PlaneWave",
    "StandingWave1D",
    "DAlembert1D",
    "SphericalPulse3D",
    "PointSourcePulse3D",
    "RadialBump",
    "eval_oracle",
    "wave_residual",
    "poisson_2d_bruteforce",
    "gaussian_velocity_2d",
]


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Profile:
    """Compactly started 1-D profile ``g(s)``, zero for ``s <= 0``.

    ``kind="power"``: ``g(s) = amplitude · s^p`` for ``s > 0``.
    ``kind="pulse"``: ``g(s) = amplitude · sin⁴(πs/width)`` on ``[0, width]``;
    three times continuously differentiable.
    """

    kind: str = "pulse"
    width: float = 1.0
    power: float = 2.0
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("power", "pulse"):
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if self.width <= 0 or self.power < 0:
            raise ValidationError("profile width must be positive and power non-negative")

    def derivative(self, s, order: int = 0) -> np.ndarray:
        """``d^order g / ds^order`` for ``order`` in 0..2."""
        s = np.asarray(s, dtype=float)
        A = self.amplitude
        if self.kind == "power":
            p = self.power
            sp = np.where(s > 0, s, 0.0)
            coef = 1.0
            for j in range(order):
                coef *= p - j
            with np.errstate(divide="ignore", invalid="ignore"):
                val = A * coef * np.where(s > 0, sp ** (p - order), 0.0)
            return np.where(s > 0, val, 0.0)
        k = math.pi / self.width
        on = (s > 0) & (s < self.width)
        si, co = np.sin(k * s), np.cos(k * s)
        if order == 0:
            val = si**4
        elif order == 1:
            val = 4.0 * k * si**3 * co
        elif order == 2:
            val = 4.0 * k * k * (3.0 * si**2 * co**2 - si**4)
        else:
            raise ValidationError("profile derivatives are available up to order 2")
        return np.where(on, A * val, 0.0)

    def __call__(self, s):
        return self.derivative(s, 0)


class OracleSolution(Protocol):
    kind: str
    dim: int
    c: float

    def eval(self, x, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]: ...


def _points(x, dim: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1, dim)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PlaneWave:
    """Travelling wave ``u = g(ct - k·x - offset)`` with a unit direction ``k``."""

    direction: tuple
    c: float = 1.0
    profile: Profile = field(default_factory=Profile)
    offset: float = 0.0
    kind: str = "plane_wave"

    def __post_init__(self) -> None:
        k = np.asarray(self.direction, dtype=float)
        if not np.isclose(np.linalg.norm(k), 1.0, atol=1e-12):
            raise ValidationError("plane-wave direction must be a unit vector")

    @property
    def dim(self) -> int:
        return len(self.direction)

    def phase(self, x, t):
        k = np.asarray(self.direction, dtype=float)
        return self.c * np.asarray(t, dtype=float) - _points(x, self.dim) @ k - self.offset

    def eval(self, x, t):
        s = self.phase(x, t)
        k = np.asarray(self.direction, dtype=float)
        g1 = self.profile.derivative(s, 1)
        return self.profile(s), self.c * g1, -g1[:, None] * k[None, :]

    def hessian_trace_residual(self, x, t):
        """``Δu - c⁻² u_tt`` in closed form (zero by construction)."""
        s = self.phase(x, t)
        g2 = self.profile.derivative(s, 2)
        return g2 - g2


@dataclass(frozen=True)
class StandingWave1D:
    """``u = A sin(π(x - a1)/d) cos(πct/d)`` on ``[a1, a1 + d]``."""

    a1: float = 0.0
    length: float = 1.0
    c: float = 1.0
    amplitude: float = 1.0
    kind: str = "standing_wave_1d"
    dim: int = 1

    def eval(self, x, t):
        x = _points(x, 1)[:, 0]
        k = math.pi / self.length
        t = np.asarray(t, dtype=float)
        sx, cx = np.sin(k * (x - self.a1)), np.cos(k * (x - self.a1))
        ct, st = np.cos(k * self.c * t), np.sin(k * self.c * t)
        A = self.amplitude
        return A * sx * ct, -A * k * self.c * sx * st, (A * k * cx * ct)[:, None]


@dataclass(frozen=True)
class DAlembert1D:
    """d'Alembert solution on the whole line.

    Parameters
    ----------
    u0, du0 : callable
        Initial displacement and its derivative.
    v0, V0 : callable
        Initial velocity and an antiderivative of it.
    """

    u0: Callable = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    du0: Callable = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    v0: Callable = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    V0: Callable = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    c: float = 1.0
    kind: str = "dalembert_1d"
    dim: int = 1

    def eval(self, x, t):
        x = _points(x, 1)[:, 0]
        c = self.c
        p, m = x + c * t, x - c * t
        u = 0.5 * (self.u0(p) + self.u0(m)) + (self.V0(p) - self.V0(m)) / (2.0 * c)
        ut = 0.5 * c * (self.du0(p) - self.du0(m)) + 0.5 * (self.v0(p) + self.v0(m))
        ux = 0.5 * (self.du0(p) + self.du0(m)) + (self.v0(p) - self.v0(m)) / (2.0 * c)
        return u, ut, ux[:, None]

    @classmethod
    def hat(cls, center: float, half_width: float, height: float = 1.0, c: float = 1.0) -> "DAlembert1D":
        """Triangle-hat displacement released from rest."""

        def u0(s):
            s = np.asarray(s, dtype=float)
            return height * np.maximum(0.0, 1.0 - np.abs(s - center) / half_width)

        def du0(s):
            s = np.asarray(s, dtype=float)
            inside = np.abs(s - center) < half_width
            return np.where(inside, -height * np.sign(s - center) / half_width, 0.0)

        return cls(u0=u0, du0=du0, c=c)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialBump:
    """Compact bump ``A (1 - ρ²/a²)^k`` for ``ρ < a`` around ``center``."""

    center: tuple
    radius: float = 0.5
    power: int = 4
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.power < 1:
            raise ValidationError("bump radius must be positive and power >= 1")

    def profile(self, rho):
        rho = np.abs(np.asarray(rho, dtype=float))
        z = np.maximum(1.0 - (rho / self.radius) ** 2, 0.0)
        return self.amplitude * z**self.power

    def profile_d1(self, rho):
        rho = np.asarray(rho, dtype=float)
        z = np.maximum(1.0 - (rho / self.radius) ** 2, 0.0)
        return self.amplitude * self.power * z ** (self.power - 1) * (-2.0 * rho / self.radius**2)

    def first_moment(self, rho):
        """``∫_0^ρ s·φ(s) ds`` (even in ``ρ``)."""
        rho = np.abs(np.asarray(rho, dtype=float))
        z = np.maximum(1.0 - (rho / self.radius) ** 2, 0.0)
        a2 = self.radius**2
        return self.amplitude * 0.5 * a2 * (1.0 - z ** (self.power + 1)) / (self.power + 1)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.asarray(self.center, dtype=float)
        return self.profile(np.linalg.norm(pts.reshape(-1, len(c)) - c, axis=1))


@dataclass(frozen=True)
class SphericalPulse3D:
    """Radial solution in free space started by bumps in ``u₀`` and ``u̇₀``.

    ``u̇₀`` part: ``u = (Φ(R+ct) - Φ(R-ct)) / (2cR)`` with ``Φ`` the first
    moment of the velocity bump.  The ``u₀`` part is its time derivative with
    the displacement bump.
    """

    velocity: RadialBump | None = None
    displacement: RadialBump | None = None
    c: float = 1.0
    kind: str = "spherical_pulse_3d"
    dim: int = 3

    def _center(self) -> np.ndarray:
        b = self.velocity or self.displacement
        if b is None:
            return np.zeros(3)
        return np.asarray(b.center, dtype=float)

    def eval(self, x, t):
        x = _points(x, 3)
        c = self.c
        t = np.asarray(t, dtype=float)
        d = x - self._center()
        R = np.linalg.norm(d, axis=1)
        small = R < 1e-7
        Rs = np.where(small, 1e-7, R)
        u = np.zeros(len(x))
        ut = np.zeros(len(x))
        uR = np.zeros(len(x))
        p, m = Rs + c * t, Rs - c * t
        if self.velocity is not None:
            b = self.velocity
            F = lambda r: b.first_moment(r)
            F1 = lambda r: r * b.profile(r)
            F2 = lambda r: b.profile(r) + r * b.profile_d1(r)
            uv = (F(p) - F(m)) / (2.0 * c * Rs)
            u += uv
            ut += (F1(p) + F1(m)) / (2.0 * Rs)
            uR += (F1(p) - F1(m)) / (2.0 * c * Rs) - uv / Rs
        if self.displacement is not None:
            b = self.displacement
            G1 = lambda r: r * b.profile(r)
            G2 = lambda r: b.profile(r) + r * b.profile_d1(r)
            ud = (G1(p) + G1(m)) / (2.0 * Rs)
            u += ud
            ut += c * (G2(p) - G2(m)) / (2.0 * Rs)
            uR += (G2(p) + G2(m)) / (2.0 * Rs) - ud / Rs
        unit = d / Rs[:, None]
        grad = np.where(small[:, None], 0.0, uR[:, None] * unit)
        return u, ut, grad

    def initial_data(self):
        """Callables ``(u0, u0_dot)`` on points of shape (m, 3)."""
        zero = lambda p: np.zeros(len(np.asarray(p).reshape(-1, 3)))
        return (self.displacement or zero), (self.velocity or zero)


@dataclass(frozen=True)
class PointSourcePulse3D:
    """Outgoing spherical pulse ``u = g(ct - |x - s| - offset) / |x - s|``.

    Regular wherever ``x != s``; with the source outside a domain it is a
    homogeneous solution inside it with a curved front.
    """

    source: tuple = (0.0, 0.0, 0.0)
    c: float = 1.0
    profile: Profile = field(default_factory=Profile)
    offset: float = 0.0
    kind: str = "point_source_3d"
    dim: int = 3

    def eval(self, x, t):
        x = _points(x, 3)
        d = x - np.asarray(self.source, dtype=float)[None, :]
        r = np.linalg.norm(d, axis=1)
        if np.any(r == 0.0):
            raise ValidationError("point-source oracle evaluated at its source")
        s = self.c * np.asarray(t, dtype=float) - r - self.offset
        g0 = self.profile(s)
        g1 = self.profile.derivative(s, 1)
        u = g0 / r
        ur = -g1 / r - g0 / r**2
        return u, self.c * g1 / r, ur[:, None] * d / r[:, None]


def eval_oracle(oracle: OracleSolution, x, t):
    """Exact ``(u, u_dot, grad_u)`` of ``oracle`` at points ``x`` and time ``t``."""
    return oracle.eval(x, t)


def wave_residual(oracle: OracleSolution, x, t, h: float = 1e-3) -> np.ndarray:
    """Second-order finite-difference ``Δu - c⁻² u_tt`` at the given points."""
    x = _points(x, oracle.dim)
    c = oracle.c
    u0 = oracle.eval(x, t)[0]
    lap = np.zeros(len(x))
    for j in range(oracle.dim):
        e = np.zeros(oracle.dim)
        e[j] = h
        lap += (oracle.eval(x + e, t)[0] - 2.0 * u0 + oracle.eval(x - e, t)[0]) / h**2
    k = h / c
    utt = (oracle.eval(x, t + k)[0] - 2.0 * u0 + oracle.eval(x, t - k)[0]) / k**2
    return lap - utt / c**2


# ---------------------------------------------------------------------------
def _poisson_radial(g: Callable, x: np.ndarray, rad: float, n_ang: int, tol: float) -> float:
    """``∫_{|y-x|<rad} g(y) / √(rad² - r²) dV`` by trapezoid in angle and
    adaptive algebraic-weight quadrature in ``r``."""
    th = 2.0 * np.pi * np.arange(n_ang) / n_ang
    dirs = np.column_stack([np.cos(th), np.sin(th)])

    def ring(r: float) -> float:
        return float(np.mean(g(x + r * dirs))) * 2.0 * np.pi * r / math.sqrt(rad + r)

    val, _ = integrate.quad(
        ring, 0.0, rad, weight="alg", wvar=(0.0, -0.5), epsabs=tol, epsrel=tol, limit=400
    )
    return val


def poisson_2d_bruteforce(init, x, t: float, c: float, resolution: int = 256, tol: float = 1e-12) -> float:
    """Free-space 2-D solution from initial data by brute-force quadrature.

    ``u = (1/2πc) [∂_t ∫ u₀/√(c²t² - r²) + ∫ u̇₀/√(c²t² - r²)]`` over the disk
    ``r < ct``.  The time derivative uses a fourth-order central difference.

    Parameters
    ----------
    init : object with ``u0`` and ``u0_dot`` callables on points (m, 2), or a
        tuple ``(u0, u0_dot)``; either may be ``None``.
    resolution : int
        Number of angular points of the periodic trapezoid rule.
    """
    u0, v0 = _split_init(init)
    x = np.asarray(x, dtype=float).reshape(2)
    if t <= 0:
        return float(u0(x[None])[0]) if u0 is not None else 0.0
    total = 0.0
    if v0 is not None:
        total += _poisson_radial(v0, x, c * t, resolution, tol)
    if u0 is not None:
        k = 1e-3 * t
        f = lambda tt: _poisson_radial(u0, x, c * tt, resolution, tol)
        total += (-f(t + 2 * k) + 8 * f(t + k) - 8 * f(t - k) + f(t - 2 * k)) / (12.0 * k)
    return total / (2.0 * math.pi * c)


def _split_init(init):
    if init is None:
        return None, None
    if isinstance(init, tuple):
        return init
    return getattr(init, "u0", None), getattr(init, "u0_dot", None)


def gaussian_velocity_2d(width: float, rho: float, t: float, c: float = 1.0) -> float:
    """Free-space 2-D solution for ``u₀ = 0``, ``u̇₀ = exp(-ρ²/width²)``.

    Evaluated by its Hankel-transform integral, independent of the Poisson
    quadrature.
    """
    s2 = width * width

    def f(k):
        return 0.5 * s2 * np.exp(-0.25 * k * k * s2) * special.j0(k * rho) * np.sin(c * k * t) / c

    kmax = 2.0 * math.sqrt(-math.log(1e-18)) / width
    val, _ = integrate.quad(f, 0.0, kmax, limit=2000, epsabs=1e-14, epsrel=1e-12)
    return val
