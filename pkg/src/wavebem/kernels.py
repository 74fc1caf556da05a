"""Closed-form fundamental solutions of the scalar wave operator.

For the operator ``Δ - c⁻² ∂²/∂t²`` in one, two and three space dimensions
this module provides

* ``U``: the causal Green function,
* ``W``: its antiderivative in time (``∂W/∂t = U``),
* ``H``: the directional derivative ``∇W · m``.

All kernels vanish identically for ``t < 0`` and outside the light cone
``r > c t``.  The Heaviside function takes the value ``1/2`` at zero.  In
three dimensions ``U`` is a single layer on the cone; it is exposed through
:class:`KernelValue.delta_weight` and never evaluated pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSourceError, FrontSingularityError, ValidationError

__all__ = [
    "WaveKernel",
    "KernelValue",
    "heaviside",
    "eval_U",
    "eval_W",
    "eval_H_kernel",
    "check_symmetry",
]


def heaviside(s: float) -> float:
    """Heaviside step with ``H(0) = 1/2``."""
    if s > 0.0:
        return 1.0
    if s < 0.0:
        return 0.0
    return 0.5


@dataclass(frozen=True)
class WaveKernel:
    """Wave operator in ``dim`` space dimensions with propagation speed ``c``."""

    dim: int
    c: float

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"dim must be 1, 2 or 3, got {self.dim!r}")
        if not (np.isfinite(self.c) and self.c > 0.0):
            raise ValidationError(f"wave speed must be positive, got {self.c!r}")


@dataclass(frozen=True)
class KernelValue:
    """Value of a possibly singular kernel.

    Attributes
    ----------
    regular_part : float
        Pointwise (function) part of the kernel.
    has_front_delta : bool
        True for the three-dimensional kernels that carry a layer on the front.
    delta_weight : float
        Coefficient of ``δ(t - r/c)``.  Zero outside the closed light cone.
    """

    regular_part: float
    has_front_delta: bool = False
    delta_weight: float = 0.0


def _check_r(r: float) -> float:
    r = float(r)
    if not (r >= 0.0) or not math.isfinite(r):
        raise ValidationError(f"distance must be finite and non-negative, got {r!r}")
    return r


def eval_U(k: WaveKernel, r: float, t: float) -> KernelValue:
    """Green function ``U(r, t)``.

    Raises
    ------
    FrontSingularityError
        ``dim == 2`` and ``r == c t`` exactly.
    DegenerateSourceError
        ``dim == 3`` and ``r == 0``.
    """
    r = _check_r(r)
    c = k.c
    ct = c * t
    if k.dim == 3 and r == 0.0:
        raise DegenerateSourceError("3-D Green function is undefined at r = 0")
    if t < 0.0 or r > ct:
        return KernelValue(0.0, k.dim == 3, 0.0)
    if k.dim == 1:
        return KernelValue(-0.5 * c * heaviside(ct - r))
    if k.dim == 2:
        if r == ct:
            raise FrontSingularityError("2-D Green function is singular on r = ct")
        return KernelValue(-c / (2.0 * math.pi * math.sqrt(ct * ct - r * r)))
    return KernelValue(0.0, True, -1.0 / (4.0 * math.pi * r))


def eval_W(k: WaveKernel, r: float, t: float) -> float:
    """Time antiderivative ``W`` of the Green function.

    ``dim=1``: ``-(ct - r)/2``; ``dim=2``: ``-arccosh(ct/r)/(2π)``;
    ``dim=3``: ``-1/(4πr)``, each multiplied by ``H(ct - r)``.
    """
    r = _check_r(r)
    if k.dim > 1 and r == 0.0:
        raise DegenerateSourceError(f"W is undefined at r = 0 for dim={k.dim}")
    ct = k.c * t
    if t < 0.0 or r > ct:
        return 0.0
    if k.dim == 1:
        return -0.5 * (ct - r)
    if k.dim == 2:
        return -math.acosh(ct / r) / (2.0 * math.pi)
    return -heaviside(ct - r) / (4.0 * math.pi * r)


def eval_H_kernel(k: WaveKernel, offset, m, t: float) -> KernelValue:
    """Directional derivative ``H = ∇W · m`` at spatial offset ``offset``.

    Parameters
    ----------
    k : WaveKernel
    offset : array_like or float
        Argument of the kernel (field point minus source point, or the
        reverse; the kernel is odd in it).
    m : array_like or float
        Unit direction.
    t : float
    """
    off = np.atleast_1d(np.asarray(offset, dtype=float))
    mv = np.atleast_1d(np.asarray(m, dtype=float))
    if off.shape != (k.dim,) or mv.shape != (k.dim,):
        raise ValidationError("offset and direction must have length dim")
    R = float(np.sqrt(np.dot(off, off)))
    proj = float(np.dot(off, mv))
    c = k.c
    ct = c * t
    if k.dim == 1:
        # sgn(0) = 0 makes the kernel vanish at coincident points.
        if t < 0.0 or R > ct:
            return KernelValue(0.0)
        return KernelValue(0.5 * float(np.sign(off[0])) * heaviside(ct - R) * mv[0])
    if R == 0.0:
        raise DegenerateSourceError("H is undefined at zero offset")
    if t < 0.0 or R > ct:
        return KernelValue(0.0, k.dim == 3, 0.0)
    if k.dim == 2:
        if R == ct:
            raise FrontSingularityError("2-D H kernel is singular on r = ct")
        s = math.sqrt(ct * ct - R * R)
        return KernelValue(ct * proj / (2.0 * math.pi * s * R * R))
    reg = heaviside(ct - R) * proj / (4.0 * math.pi * R**3)
    return KernelValue(reg, True, proj / (4.0 * math.pi * c * R * R))


def check_symmetry(k: WaveKernel, x, y, m, t: float) -> tuple[float, float, float]:
    """Residuals of the reciprocity relations under exchange of ``x`` and ``y``.

    Returns
    -------
    tuple of float
        ``|U(x,y) - U(y,x)|``, ``|W(x,y) - W(y,x)|`` and ``|H(x,y) + H(y,x)|``.
        For ``dim=3`` the delta weights are included in the first and third
        entries.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.array_equal(x, y):
        raise DegenerateSourceError("symmetry check needs x != y")
    rxy = float(np.linalg.norm(x - y))
    ryx = float(np.linalg.norm(y - x))
    u1, u2 = eval_U(k, rxy, t), eval_U(k, ryx, t)
    du = abs(u1.regular_part - u2.regular_part) + abs(u1.delta_weight - u2.delta_weight)
    dw = abs(eval_W(k, rxy, t) - eval_W(k, ryx, t))
    h1, h2 = eval_H_kernel(k, x - y, m, t), eval_H_kernel(k, y - x, m, t)
    dh = abs(h1.regular_part + h2.regular_part) + abs(h1.delta_weight + h2.delta_weight)
    return du, dw, dh
