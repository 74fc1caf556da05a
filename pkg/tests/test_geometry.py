import math

import numpy as np
import pytest

from wavebem.errors import DegenerateSourceError, GeometryError, ValidationError
from wavebem.geometry import (
    BoundaryMesh,
    DomainIndicator,
    build_circle,
    build_interval,
    build_sphere,
    dr_dn,
    horizon_time,
    load_mesh,
    retarded_active_set,
    save_mesh,
)


def test_circle_polygon_measures():
    n = 64
    m = build_circle((0.5, -0.2), 2.0, n)
    assert m.n_elements == n
    assert m.total_measure() == pytest.approx(2 * n * 2.0 * math.sin(math.pi / n))
    assert m.signed_volume() == pytest.approx(0.5 * n * 4.0 * math.sin(2 * math.pi / n))
    outward = np.einsum("ij,ij->i", m.centroids - [0.5, -0.2], m.normals)
    assert np.all(outward > 0)


def test_sphere_is_closed_and_outward():
    m = build_sphere((0, 0, 0), 1.0, 2)
    assert m.n_elements == 320
    assert np.all(np.einsum("ij,ij->i", m.centroids, m.normals) > 0)
    assert 0.95 * 4 * math.pi / 3 < m.signed_volume() < 4 * math.pi / 3
    assert np.allclose(np.linalg.norm(m.normals, axis=1), 1.0)


def test_interval_mesh():
    m = build_interval(-1.0, 2.0)
    assert m.n_elements == 2
    assert m.normals[:, 0].tolist() == [-1.0, 1.0]
    with pytest.raises(GeometryError):
        build_interval(1.0, 0.0)


def test_indicator_values():
    circle = build_circle((0, 0), 1.0, 128)
    ind = DomainIndicator(circle)
    assert ind((0.2, 0.3)) == 1.0
    assert ind(circle.centroids[7]) == 0.5
    assert ind((1.2, 0.0)) == 0.0
    sphere = build_sphere((0, 0, 0), 1.0, 1)
    vals = DomainIndicator(sphere).many([[0, 0, 0], sphere.centroids[0], [2, 0, 0]])
    assert vals.tolist() == [1.0, 0.5, 0.0]


def test_bad_meshes_rejected():
    with pytest.raises(GeometryError):
        BoundaryMesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 1], [1, 5]])
    with pytest.raises(GeometryError):
        BoundaryMesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 1], [1, 2]])  # not closed
    with pytest.raises(ValidationError):
        BoundaryMesh(4, [[0, 0, 0, 0]], [[0, 0, 0, 0]])


def test_active_set_and_horizon():
    m = build_circle((0, 0), 1.0, 32)
    idx, r = retarded_active_set(m, (0.0, 0.0), 0.5, 1.0)
    assert idx.size == 0
    idx, r = retarded_active_set(m, (0.0, 0.0), 1.01, 1.0)
    assert idx.size == 32 and np.all(r < 1.01)
    assert horizon_time(m, (0.0, 0.0), 2.0) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        retarded_active_set(m, (0, 0), -1.0, 1.0)


def test_dr_dn():
    assert dr_dn([0, 0], [2, 0], [1, 0]) == 1.0
    assert dr_dn([0, 0], [0, 2], [1, 0]) == 0.0
    with pytest.raises(DegenerateSourceError):
        dr_dn([1, 1], [1, 1], [1, 0])


@pytest.mark.parametrize("mesh", [build_circle((0, 0), 1.0, 16), build_sphere((0, 0, 0), 1.0, 1),
                                  build_interval(0.0, 1.5)])
def test_mesh_round_trip(tmp_path, mesh):
    path = tmp_path / "m.csv"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert back.dim == mesh.dim
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.cells, mesh.cells)


def test_mesh_arrays_are_read_only():
    m = build_circle((0, 0), 1.0, 8)
    with pytest.raises(ValueError):
        m.nodes[0, 0] = 3.0
