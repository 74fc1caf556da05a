"""Exact spatial integrals of retarded kernels over flat boundary elements.

Straight segments (2-D)
    For a field point ``x`` and a segment with unit tangent ``e`` and outward
    normal ``n`` the local coordinates are ``σ = (y - x)·e`` and the signed
    height ``h = (p1 - x)·n``.  The two time-dependent integrals

    * ``A(τ) = ∫_{r<cτ} dS / √(c²τ² - r²)``
    * ``B(τ) = τ ∫_{r<cτ} (1/r)(∂r/∂n) dS / √(c²τ² - r²)``

    have closed forms in ``σ``.  Their time integrals over arbitrary windows
    are computed by Gauss rules on pieces split at the kinks ``τ = d/c`` and
    ``τ = r(p1)/c, r(p2)/c``, with a cosine stretching that absorbs the
    square-root endpoint behaviour.

Flat triangles (3-D)
    Each triangle is split into signed sub-triangles fanning out from the
    foot point of ``x`` on the triangle plane.  Radial integrals of
    ``1/r``, ``∂(1/r)/∂n`` and ``∂ln r/∂n`` (and their first moments in ``r``)
    are exact; the remaining integral along each edge uses the substitution
    ``s = δ sinh w`` which keeps the integrand smooth even when the foot point
    approaches an edge line.  Moments are cumulative in the ball radius ``R``
    so that shells ``R_l < r < R_{l+1}`` follow by differencing.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "stretched_rule",
    "segment_frames",
    "segment_A",
    "segment_B",
    "segment_time_integrals",
    "segment_static_dipole",
    "segment_static_single",
    "triangle_moments",
    "N_TRI_MOMENTS",
]


#: relative height below which a field point counts as lying in the element plane
PLANE_TOL = 1e-11


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return _ro(0.5 * (x + 1.0)), _ro(0.5 * w)


@lru_cache(maxsize=64)
def stretched_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule on ``[0, 1]`` with the map ``u = (1 - cos θ)/2``.

    Integrands with inverse square-root behaviour at either end become smooth.
    """
    x, w = gauss_legendre(n)
    th = np.pi * x
    return _ro(0.5 * (1.0 - np.cos(th))), _ro(w * 0.5 * np.pi * np.sin(th))


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# 2-D: straight segments
# ---------------------------------------------------------------------------
def segment_frames(vertices: np.ndarray, normals: np.ndarray, X: np.ndarray):
    """Local coordinates of all segments relative to all field points.

    Parameters
    ----------
    vertices : ndarray, shape (N, 2, 2)
    normals : ndarray, shape (N, 2)
    X : ndarray, shape (P, 2)

    Returns
    -------
    s1, s2, h : ndarray, shape (P, N)
        Tangential coordinates of the endpoints and signed normal height.
    """
    p1 = vertices[:, 0]
    d = vertices[:, 1] - p1
    L = np.hypot(d[:, 0], d[:, 1])
    e = d / L[:, None]
    rel = p1[None, :, :] - X[:, None, :]
    s1 = np.einsum("pnk,nk->pn", rel, e)
    h = np.einsum("pnk,nk->pn", rel, normals)
    # points on the element line: exact zero selects the principal value
    h = np.where(np.abs(h) <= PLANE_TOL * L[None, :], 0.0, h)
    return s1, s1 + L[None, :], h


def segment_A(s1, s2, d, ct):
    """``∫ dS/√(c²τ² - r²)`` over the part of a segment inside the cone."""
    rho2 = ct * ct - d * d
    live = rho2 > 0.0
    rho = np.sqrt(np.where(live, rho2, 1.0))
    val = np.arcsin(np.clip(s2 / rho, -1.0, 1.0)) - np.arcsin(np.clip(s1 / rho, -1.0, 1.0))
    return np.where(live, val, 0.0)


def segment_B(s1, s2, h, ct, c):
    """``τ ∫ (1/r)(∂r/∂n) dS/√(c²τ² - r²)`` over the part inside the cone."""
    d = np.abs(h)
    rho2 = ct * ct - d * d
    live = (rho2 > 0.0) & (d > 0.0)
    rho = np.sqrt(np.where(live, rho2, 1.0))

    def F(s):
        sc = np.clip(s, -rho, rho)
        return np.arctan2(sc * ct, d * np.sqrt(np.maximum(rho * rho - sc * sc, 0.0)))

    val = np.sign(h) * (F(s2) - F(s1)) / c
    return np.where(live, val, 0.0)


def segment_time_integrals(s1, s2, h, c: float, edges, order: int = 8):
    """Integrals of ``A`` and ``B`` over consecutive time windows.

    Parameters
    ----------
    s1, s2, h : ndarray, shape (P, N)
        Output of :func:`segment_frames`.
    c : float
    edges : array_like, shape (M + 1,)
        Increasing window boundaries in ``τ`` (all ``>= 0``).
    order : int
        Nodes per smooth piece.

    Returns
    -------
    IA, IB : ndarray, shape (P, N, M)
    """
    edges = np.asarray(edges, dtype=float)
    M = len(edges) - 1
    d = np.abs(h)
    onset = d / c
    kinks = np.stack([onset, np.hypot(d, s1) / c, np.hypot(d, s2) / c], axis=-1)
    u, w = stretched_rule(order)
    IA = np.zeros(s1.shape + (M,))
    IB = np.zeros(s1.shape + (M,))
    first = float(onset.min())
    for m in range(M):
        a, b = edges[m], edges[m + 1]
        if b <= first or b <= a:
            continue
        pts = np.concatenate(
            [np.full(s1.shape + (1,), a), np.clip(kinks, a, b), np.full(s1.shape + (1,), b)],
            axis=-1,
        )
        pts.sort(axis=-1)
        lo, hi = pts[..., :-1], pts[..., 1:]  # (P, N, 4)
        tau = lo[..., None] + (hi - lo)[..., None] * u  # (P, N, 4, n)
        wt = (hi - lo)[..., None] * w
        ct = c * tau
        A = segment_A(s1[..., None, None], s2[..., None, None], d[..., None, None], ct)
        B = segment_B(s1[..., None, None], s2[..., None, None], h[..., None, None], ct, c)
        IA[..., m] = np.einsum("pnqk,pnqk->pn", A, wt)
        IB[..., m] = np.einsum("pnqk,pnqk->pn", B, wt)
    return IA, IB


def _sigma_windows(s1, s2, d, r_in, r_out):
    """Sub-intervals of ``[s1, s2]`` where ``r_in < √(d² + σ²) < r_out``."""
    so = np.sqrt(np.maximum(r_out * r_out - d * d, 0.0))
    si = np.sqrt(np.maximum(r_in * r_in - d * d, 0.0))
    out = []
    for lo, hi in ((-so, -si), (si, so)):
        a = np.clip(lo, s1, s2)
        b = np.clip(hi, s1, s2)
        out.append((a, np.maximum(a, b)))
    return out


def segment_static_dipole(s1, s2, h, r_in=0.0, r_out=np.inf):
    """``∫ (1/r)(∂r/∂n) dS`` over the segment part with ``r_in < r < r_out``.

    This is the signed angle subtended by that part of the segment.
    """
    d = np.abs(h)
    safe = np.where(d > 0.0, d, 1.0)
    tot = 0.0
    for a, b in _sigma_windows(s1, s2, d, r_in, r_out):
        tot = tot + (np.arctan(b / safe) - np.arctan(a / safe))
    return np.where(d > 0.0, np.sign(h) * tot, 0.0)


def segment_static_single(s1, s2, h, r_in=0.0, r_out=np.inf):
    """``∫ ln(1/r) dS`` over the segment part with ``r_in < r < r_out``."""
    d = np.abs(h)

    def F(s):
        # antiderivative of -0.5 ln(d² + s²)
        r2 = d * d + s * s
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(r2 > 0.0, np.log(np.where(r2 > 0.0, r2, 1.0)), 0.0)
            at = np.where(d > 0.0, np.arctan2(s, np.where(d > 0.0, d, 1.0)), 0.0)
        return -0.5 * (s * lg - 2.0 * s + 2.0 * d * at)

    tot = 0.0
    for a, b in _sigma_windows(s1, s2, d, r_in, r_out):
        tot = tot + (F(b) - F(a))
    return tot


# ---------------------------------------------------------------------------
# 3-D: flat triangles
# ---------------------------------------------------------------------------
#: moments returned by :func:`triangle_moments`, in order:
#: ``1/r``, ``r·(1/r)``, ``∂(1/r)/∂n``, ``r·∂(1/r)/∂n``, ``∂ln r/∂n``, ``r·∂ln r/∂n``
N_TRI_MOMENTS = 6


def _radial_antiderivatives(rho, h):
    """Exact ``∫_0^ρ k(√(h²+s²)) s ds`` for the six kernel moments."""
    ah = np.abs(h)
    r = np.sqrt(h * h + rho * rho)
    nz = ah > 0.0
    safe = np.where(nz, ah, 1.0)
    lg = np.where(nz, np.log1p((rho / safe) ** 2), 0.0)
    k0 = r - ah
    return np.stack(
        [
            k0,
            0.5 * rho * rho,
            np.where(nz, h / np.where(r > 0, r, 1.0) - np.sign(h), 0.0),
            -0.5 * h * lg,
            0.5 * h * lg,
            h * k0,
        ],
        axis=0,
    )


def triangle_moments(X, V, n, R, order: int = 8, max_width: float = 1.5):
    """Kernel moments over the part of each triangle inside the ball ``|y-x| < R``.

    Parameters
    ----------
    X : ndarray, shape (Q, 3)
        Field points.
    V : ndarray, shape (Q, 3, 3)
        Triangle vertices, ordered so that the right-hand normal is ``n``.
    n : ndarray, shape (Q, 3)
        Unit normals.
    R : ndarray, shape (Q,)
        Ball radii (``np.inf`` for the whole triangle).
    order : int
        Gauss points per piece of the edge integrals.
    max_width : float
        Maximum piece width in the stretched edge variable.

    Returns
    -------
    ndarray, shape (6, Q)
        See :data:`N_TRI_MOMENTS` for the ordering.
    """
    X = np.asarray(X, dtype=float)
    Q = len(X)
    out = np.zeros((N_TRI_MOMENTS, Q))
    if Q == 0:
        return out
    R = np.broadcast_to(np.asarray(R, dtype=float), (Q,))
    h = np.einsum("qk,qk->q", V[:, 0] - X, n)
    scale = np.linalg.norm(V[:, 1] - V[:, 0], axis=1)
    h = np.where(np.abs(h) <= PLANE_TOL * scale, 0.0, h)
    foot = X + h[:, None] * n
    e1 = V[:, 1] - V[:, 0]
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(n, e1)
    rel = V - foot[:, None, :]
    P2 = np.stack([np.einsum("qvk,qk->qv", rel, e1), np.einsum("qvk,qk->qv", rel, e2)], axis=-1)
    with np.errstate(invalid="ignore"):
        rhoR = np.where(R > np.abs(h), np.sqrt(np.maximum(R * R - h * h, 0.0)), 0.0)
    rhoR = np.where(np.isinf(R), np.inf, rhoR)
    live = rhoR > 0.0

    # all edges of all live triangles
    qi = np.repeat(np.flatnonzero(live), 3)
    ei = np.tile(np.arange(3), int(live.sum()))
    A = P2[qi, ei]
    B = P2[qi, (ei + 1) % 3]
    D = B - A
    L = np.hypot(D[:, 0], D[:, 1])
    t_hat = D / L[:, None]
    dsig = A[:, 0] * t_hat[:, 1] - A[:, 1] * t_hat[:, 0]  # signed foot distance
    delta = np.abs(dsig)
    sA = A[:, 0] * t_hat[:, 0] + A[:, 1] * t_hat[:, 1]
    sB = sA + L
    keep = delta > 1e-14 * L
    qi, sA, sB, delta, dsig = qi[keep], sA[keep], sB[keep], delta[keep], dsig[keep]
    rr = rhoR[qi]
    hq = h[qi]
    # stretched variable s = δ sinh w
    wA = np.arcsinh(sA / delta)
    wB = np.arcsinh(sB / delta)
    with np.errstate(invalid="ignore"):
        sc = np.where(rr > delta, np.sqrt(np.maximum(rr * rr - delta * delta, 0.0)), 0.0)
    wc = np.where(np.isinf(rr), np.inf, np.arcsinh(sc / delta))
    bp = np.stack([wA, np.clip(-wc, wA, wB), np.clip(0.0, wA, wB), np.clip(wc, wA, wB), wB], axis=1)
    lo, hi = bp[:, :-1].ravel(), bp[:, 1:].ravel()
    owner = np.repeat(np.arange(len(qi)), 4)
    width = hi - lo
    nsub = np.where(width > 0.0, np.ceil(width / max_width).astype(np.int64), 0)
    nsub = np.maximum(nsub, 0)
    owner = np.repeat(owner, nsub)
    lo_r = np.repeat(lo, nsub)
    w_r = np.repeat(width / np.maximum(nsub, 1), nsub)
    k = np.arange(len(owner)) - np.repeat(np.cumsum(nsub) - nsub, nsub)
    a = lo_r + k * w_r
    u, wq = gauss_legendre(order)
    wv = a[:, None] + w_r[:, None] * u  # (pieces, order)
    ww = w_r[:, None] * wq
    dl = delta[owner][:, None]
    rho = np.minimum(dl * np.cosh(wv), rr[owner][:, None])
    K = _radial_antiderivatives(rho, hq[owner][:, None])  # (6, pieces, order)
    # dθ = (δ_signed/δ) dw / cosh(w)
    vals = np.einsum("mpk,pk->mp", K, ww / np.cosh(wv)) * np.sign(dsig[owner])
    edge_sum = np.zeros((N_TRI_MOMENTS, len(qi)))
    for j in range(N_TRI_MOMENTS):
        edge_sum[j] = np.bincount(owner, weights=vals[j], minlength=len(qi))
        out[j] = np.bincount(qi, weights=edge_sum[j], minlength=Q)
    return out
