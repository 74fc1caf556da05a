"""Boundary meshes, retarded active sets and the domain indicator.

Meshes are immutable containers of flat elements:

* ``dim=1``: the two endpoints of an interval with normals ``-1`` and ``+1``,
* ``dim=2``: a closed counter-clockwise polygon of straight segments,
* ``dim=3``: a closed, consistently oriented triangulation.

Normals are unit and point out of the bounded domain.

Mesh file format
----------------
Plain text, ``#`` starts a comment.  The first non-comment line is
``dim n_nodes n_elems``.  It is followed by ``n_nodes`` lines of coordinates
and ``n_elems`` lines of zero-based node indices: one index per endpoint in
1-D, two per segment in 2-D, three per triangle in 3-D.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateSourceError, GeometryError, ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "Element",
    "BoundaryMesh",
    "DomainIndicator",
    "retarded_active_set",
    "dr_dn",
    "horizon_time",
    "indicator",
    "build_interval",
    "build_circle",
    "build_sphere",
    "load_mesh",
    "save_mesh",
    "point_segment_distance",
    "point_triangle_distance",
]

GEOM_TOL_FACTOR = 1e-9


@dataclass(frozen=True)
class Element:
    """Read-only view of one boundary element."""

    centroid: np.ndarray
    normal: np.ndarray
    measure: float
    vertices: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class BoundaryMesh:
    """Closed boundary of a bounded domain made of flat elements.

    Parameters
    ----------
    dim : int
        Space dimension, 1, 2 or 3.
    nodes : array_like, shape (n_nodes, dim)
    cells : array_like of int, shape (n_elems, dim)
        Node indices of each element.  Segments run counter-clockwise around
        the domain, triangles are ordered so that the right-hand normal points
        outward.
    validate : bool
        Check closedness, orientation and (2-D) self-intersection.
    """

    def __init__(self, dim: int, nodes, cells, *, validate: bool = True) -> None:
        if dim not in (1, 2, 3):
            raise ValidationError(f"mesh dimension must be 1, 2 or 3, got {dim!r}")
        nodes = np.asarray(nodes, dtype=float).reshape(-1, dim)
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, dim)
        if cells.size and (cells.min() < 0 or cells.max() >= len(nodes)):
            raise GeometryError("element references a node index out of range")
        if not np.all(np.isfinite(nodes)):
            raise GeometryError("node coordinates must be finite")
        self.dim = dim
        self.nodes = _frozen(nodes)
        self.cells = _frozen(cells)
        self.closed = True
        verts = nodes[cells]  # (n_elems, dim, dim)
        if dim == 1:
            if len(cells) != 2:
                raise GeometryError("a 1-D boundary has exactly two endpoints")
            a1, a2 = verts[0, 0, 0], verts[1, 0, 0]
            if not a1 < a2:
                raise GeometryError("interval endpoints must satisfy a1 < a2")
            centroids = verts[:, 0, :]
            normals = np.array([[-1.0], [1.0]])
            measures = np.ones(2)
        elif dim == 2:
            d = verts[:, 1] - verts[:, 0]
            measures = np.hypot(d[:, 0], d[:, 1])
            if np.any(measures <= 0.0):
                raise GeometryError("zero-length segment")
            normals = np.column_stack([d[:, 1], -d[:, 0]]) / measures[:, None]
            centroids = verts.mean(axis=1)
        else:
            cr = np.cross(verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 0])
            twice = np.linalg.norm(cr, axis=1)
            if np.any(twice <= 0.0):
                raise GeometryError("degenerate triangle")
            measures = 0.5 * twice
            normals = cr / twice[:, None]
            centroids = verts.mean(axis=1)
        self.vertices = _frozen(verts)
        self.centroids = _frozen(centroids)
        self.normals = _frozen(normals)
        self.measures = _frozen(measures)
        lo, hi = nodes.min(axis=0), nodes.max(axis=0)
        self.diameter = float(np.linalg.norm(hi - lo))
        self.geom_tol = GEOM_TOL_FACTOR * self.diameter
        if dim == 1:
            self.element_sizes = _frozen(np.full(2, hi[0] - lo[0]))
        elif dim == 2:
            self.element_sizes = _frozen(measures.copy())
        else:
            e = np.stack(
                [np.linalg.norm(verts[:, (i + 1) % 3] - verts[:, i], axis=1) for i in range(3)],
                axis=1,
            )
            self.element_sizes = _frozen(e.max(axis=1))
        if validate and dim > 1:
            self._validate()

    # -- validation -------------------------------------------------------
    def _validate(self) -> None:
        if self.dim == 2:
            starts = np.bincount(self.cells[:, 0], minlength=len(self.nodes))
            ends = np.bincount(self.cells[:, 1], minlength=len(self.nodes))
            used = (starts + ends) > 0
            if np.any(starts[used] != 1) or np.any(ends[used] != 1):
                raise GeometryError("polygon is not closed (each node must start and end one segment)")
            if self.signed_volume() <= 0.0:
                raise GeometryError("inverted orientation: signed area is not positive")
            self._check_self_intersection_2d()
        else:
            edges = np.concatenate(
                [self.cells[:, [0, 1]], self.cells[:, [1, 2]], self.cells[:, [2, 0]]]
            )
            n = len(self.nodes)
            key_dir = edges[:, 0] * n + edges[:, 1]
            key_rev = edges[:, 1] * n + edges[:, 0]
            if len(np.unique(key_dir)) != len(key_dir):
                raise GeometryError("surface is not orientable (repeated directed edge)")
            if not np.all(np.isin(key_rev, key_dir)):
                raise GeometryError("surface is not closed (edge without opposite twin)")
            if self.signed_volume() <= 0.0:
                raise GeometryError("inverted orientation: signed volume is not positive")

    def _check_self_intersection_2d(self) -> None:
        p = self.vertices[:, 0]
        q = self.vertices[:, 1]
        n = len(p)
        if n > 4000:
            logger.warning("skipping self-intersection check for %d segments", n)
            return

        def orient(a, b, c):
            return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (
                b[..., 1] - a[..., 1]
            ) * (c[..., 0] - a[..., 0])

        P1, Q1 = p[:, None, :], q[:, None, :]
        P2, Q2 = p[None, :, :], q[None, :, :]
        o1 = orient(P1, Q1, P2)
        o2 = orient(P1, Q1, Q2)
        o3 = orient(P2, Q2, P1)
        o4 = orient(P2, Q2, Q1)
        hit = (o1 * o2 < 0) & (o3 * o4 < 0)
        if np.any(hit):
            i, j = np.argwhere(hit)[0]
            raise GeometryError(f"polygon self-intersects (segments {i} and {j})")

    # -- derived quantities -----------------------------------------------
    @property
    def n_elements(self) -> int:
        return len(self.cells)

    @property
    def elements(self) -> list[Element]:
        return [
            Element(self.centroids[i], self.normals[i], float(self.measures[i]), self.vertices[i])
            for i in range(self.n_elements)
        ]

    @property
    def h_min(self) -> float:
        return float(self.element_sizes.min())

    @property
    def h_max(self) -> float:
        return float(self.element_sizes.max())

    def total_measure(self) -> float:
        return float(self.measures.sum())

    def signed_volume(self) -> float:
        """Signed length (1-D), area (2-D) or volume (3-D) of the enclosed domain."""
        if self.dim == 1:
            return float(self.nodes[self.cells[1, 0], 0] - self.nodes[self.cells[0, 0], 0])
        v = self.vertices
        if self.dim == 2:
            return 0.5 * float(np.sum(v[:, 0, 0] * v[:, 1, 1] - v[:, 1, 0] * v[:, 0, 1]))
        return float(np.sum(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])))) / 6.0

    def distance(self, x) -> float:
        """Euclidean distance from ``x`` to the boundary."""
        x = np.asarray(x, dtype=float).reshape(self.dim)
        if self.dim == 1:
            return float(np.min(np.abs(self.centroids[:, 0] - x[0])))
        if self.dim == 2:
            return float(point_segment_distance(x, self.vertices[:, 0], self.vertices[:, 1]).min())
        return float(point_triangle_distance(x, self.vertices).min())

    def __repr__(self) -> str:
        return f"BoundaryMesh(dim={self.dim}, n_nodes={len(self.nodes)}, n_elems={self.n_elements})"


# -- distance helpers -----------------------------------------------------
def point_segment_distance(x, a, b) -> np.ndarray:
    """Distance from point ``x`` to each segment ``[a_i, b_i]`` (any dimension)."""
    x = np.asarray(x, dtype=float)
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    s = np.clip(np.einsum("ij,ij->i", x - a, d) / L2, 0.0, 1.0)
    foot = a + s[:, None] * d
    return np.linalg.norm(x - foot, axis=1)


def point_triangle_distance(x, tri) -> np.ndarray:
    """Distance from point ``x`` to each triangle of ``tri`` (shape (m, 3, 3))."""
    x = np.asarray(x, dtype=float)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    n = np.cross(b - a, c - a)
    n /= np.linalg.norm(n, axis=1)[:, None]
    h = np.einsum("ij,ij->i", x - a, n)
    p = x - h[:, None] * n
    # barycentric test of the projected point
    inside = np.ones(len(tri), dtype=bool)
    for u, v in ((a, b), (b, c), (c, a)):
        inside &= np.einsum("ij,ij->i", np.cross(v - u, p - u), n) >= 0.0
    edge = np.minimum.reduce(
        [point_segment_distance(x, a, b), point_segment_distance(x, b, c), point_segment_distance(x, c, a)]
    )
    return np.where(inside, np.abs(h), edge)


# -- operations -----------------------------------------------------------
def retarded_active_set(mesh: BoundaryMesh, x, t: float, c: float):
    """Elements whose centroid lies strictly inside the retarded sphere.

    Returns
    -------
    indices : ndarray of int
    r : ndarray
        Centroid distances of the selected elements.
    """
    if t < 0:
        raise ValidationError("active set requires t >= 0")
    x = np.asarray(x, dtype=float).reshape(mesh.dim)
    r = np.linalg.norm(mesh.centroids - x, axis=1)
    sel = np.flatnonzero(r < c * t)
    return sel, r[sel]


def dr_dn(x, y, n_y) -> float:
    """Normal derivative of ``r = |y - x|`` with respect to ``y``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = y - x
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise DegenerateSourceError("dr/dn is undefined for coincident points")
    return float(np.dot(d, np.atleast_1d(n_y))) / r


def horizon_time(mesh: BoundaryMesh, x, c: float) -> float:
    """Time after which the whole boundary lies inside the retarded sphere of ``x``."""
    x = np.asarray(x, dtype=float).reshape(mesh.dim)
    return float(np.linalg.norm(mesh.nodes - x, axis=1).max()) / c


@dataclass(frozen=True)
class DomainIndicator:
    """Indicator of the bounded domain: 1 inside, 1/2 on the boundary, 0 outside."""

    mesh: BoundaryMesh

    def __call__(self, x) -> float:
        return indicator(self, x)

    def many(self, pts) -> np.ndarray:
        """Vectorised indicator over points of shape (m, dim)."""
        pts = np.asarray(pts, dtype=float).reshape(-1, self.mesh.dim)
        return _indicator_many(self.mesh, pts)


def indicator(ind: DomainIndicator, x) -> float:
    """Indicator value at a single point."""
    x = np.asarray(x, dtype=float).reshape(1, ind.mesh.dim)
    return float(_indicator_many(ind.mesh, x)[0])


def _indicator_many(mesh: BoundaryMesh, pts: np.ndarray) -> np.ndarray:
    tol = mesh.geom_tol
    out = np.empty(len(pts))
    if mesh.dim == 1:
        a1, a2 = mesh.centroids[0, 0], mesh.centroids[1, 0]
        x = pts[:, 0]
        out[:] = np.where((x > a1) & (x < a2), 1.0, 0.0)
        out[(np.abs(x - a1) <= tol) | (np.abs(x - a2) <= tol)] = 0.5
        return out
    # chunk to bound memory
    chunk = max(1, 2_000_000 // max(mesh.n_elements, 1))
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk]
        if mesh.dim == 2:
            out[s : s + chunk] = _indicator_2d(mesh, p, tol)
        else:
            out[s : s + chunk] = _indicator_3d(mesh, p, tol)
    return out


def _indicator_2d(mesh: BoundaryMesh, p: np.ndarray, tol: float) -> np.ndarray:
    a = mesh.vertices[None, :, 0, :] - p[:, None, :]
    b = mesh.vertices[None, :, 1, :] - p[:, None, :]
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = np.einsum("pek,pek->pe", a, b)
    wind = np.arctan2(cross, dot).sum(axis=1) / (2.0 * np.pi)
    res = np.where(np.abs(wind) > 0.5, 1.0, 0.0)
    d = b - a
    s = np.clip(-np.einsum("pek,pek->pe", a, d) / np.einsum("pek,pek->pe", d, d), 0.0, 1.0)
    dist = np.linalg.norm(a + s[..., None] * d, axis=2).min(axis=1)
    res[dist <= tol] = 0.5
    return res


def _indicator_3d(mesh: BoundaryMesh, p: np.ndarray, tol: float) -> np.ndarray:
    # generalized winding number from triangle solid angles
    v = mesh.vertices
    a = v[None, :, 0, :] - p[:, None, :]
    b = v[None, :, 1, :] - p[:, None, :]
    c = v[None, :, 2, :] - p[:, None, :]
    la, lb, lc = (np.linalg.norm(q, axis=2) for q in (a, b, c))
    num = np.einsum("pek,pek->pe", a, np.cross(b, c))
    den = (
        la * lb * lc
        + np.einsum("pek,pek->pe", a, b) * lc
        + np.einsum("pek,pek->pe", a, c) * lb
        + np.einsum("pek,pek->pe", b, c) * la
    )
    wind = (2.0 * np.arctan2(num, den)).sum(axis=1) / (4.0 * np.pi)
    res = np.where(np.abs(wind) > 0.5, 1.0, 0.0)
    for i in range(len(p)):
        if np.min(np.abs(np.minimum.reduce([la[i], lb[i], lc[i]]))) <= mesh.h_max + tol:
            if point_triangle_distance(p[i], v).min() <= tol:
                res[i] = 0.5
    return res


# -- builders -------------------------------------------------------------
def build_interval(a1: float, a2: float) -> BoundaryMesh:
    """Endpoints of ``[a1, a2]`` with outward normals ``-1`` and ``+1``."""
    if not a1 < a2:
        raise GeometryError("build_interval requires a1 < a2")
    return BoundaryMesh(1, [[a1], [a2]], [[0], [1]])


def build_circle(center, radius: float, n_elems: int) -> BoundaryMesh:
    """Inscribed regular polygon with ``n_elems`` segments, counter-clockwise."""
    if radius <= 0:
        raise ValidationError("radius must be positive")
    if n_elems < 8:
        raise ValidationError("a circle needs at least 8 elements")
    center = np.asarray(center, dtype=float).reshape(2)
    th = 2.0 * np.pi * np.arange(n_elems) / n_elems
    nodes = center + radius * np.column_stack([np.cos(th), np.sin(th)])
    cells = np.column_stack([np.arange(n_elems), (np.arange(n_elems) + 1) % n_elems])
    return BoundaryMesh(2, nodes, cells)


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v / np.linalg.norm(v, axis=1)[:, None], f


def build_sphere(center, radius: float, refinement: int) -> BoundaryMesh:
    """Icosphere: icosahedron subdivided ``refinement`` times, projected to the sphere."""
    if radius <= 0:
        raise ValidationError("radius must be positive")
    if refinement < 0:
        raise ValidationError("refinement must be non-negative")
    verts, faces = _icosahedron()
    verts = list(verts)
    for _ in range(refinement):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new, dtype=np.int64)
    nodes = np.asarray(center, dtype=float).reshape(3) + radius * np.array(verts)
    return BoundaryMesh(3, nodes, faces)


def load_mesh(path) -> BoundaryMesh:
    """Read a mesh in the plain-text format described in the module docstring."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read mesh file {path}: {exc}") from exc
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    if not lines:
        raise ValidationError(f"{path}: empty mesh file")
    lineno, head = lines[0]
    try:
        dim, n_nodes, n_elems = (int(v) for v in head)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: header must be 'dim n_nodes n_elems'") from None
    if len(lines) != 1 + n_nodes + n_elems:
        raise ValidationError(
            f"{path}: expected {n_nodes} node and {n_elems} element lines, found {len(lines) - 1} lines"
        )
    nodes, cells = [], []
    for lineno, tok in lines[1 : 1 + n_nodes]:
        if len(tok) != dim:
            raise ValidationError(f"{path}:{lineno}: node line needs {dim} coordinates")
        try:
            nodes.append([float(v) for v in tok])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: malformed coordinate") from None
    for lineno, tok in lines[1 + n_nodes :]:
        if len(tok) != dim:
            raise ValidationError(f"{path}:{lineno}: element line needs {dim} node indices")
        try:
            cells.append([int(v) for v in tok])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: malformed node index") from None
    return BoundaryMesh(dim, np.array(nodes), np.array(cells))


def save_mesh(mesh: BoundaryMesh, path) -> None:
    """Write ``mesh`` in the plain-text format read by :func:`load_mesh`."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {len(mesh.nodes)} {mesh.n_elements}\n")
        for p in mesh.nodes:
            fh.write(" ".join(repr(float(v)) for v in p) + "\n")
        for cell in mesh.cells:
            fh.write(" ".join(str(int(v)) for v in cell) + "\n")
