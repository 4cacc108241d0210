"""Mesh construction, topology, geometry, classification, file exchange."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdgadvect.mesh import (
    NO_ELEM,
    Mesh,
    classify_boundary_edges,
    edge_quad_points,
    elem_quad_points,
    generate_structured_mesh,
    read_mesh_file,
    write_mesh_file,
)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_structured_mesh_counts(n):
    mesh = generate_structured_mesh(n)
    assert mesh.num_vertices == (n + 1) ** 2
    assert mesh.num_elements == 2 * n * n
    assert mesh.num_edges == 3 * n * n + 2 * n
    assert int(mesh.boundary_edge.sum()) == 4 * n


def test_structured_mesh_geometry(small_mesh):
    mesh = small_mesh
    n = 3
    assert np.allclose(mesh.area, 1.0 / (2 * n * n))
    assert abs(mesh.area.sum() - 1.0) < 1e-14
    # jacobian determinant is twice the (positive) area
    dets = np.linalg.det(mesh.jacobian)
    assert np.allclose(dets, 2.0 * mesh.area)
    assert np.all(dets > 0)  # counterclockwise elements
    # edge lengths match their vertex pairs
    pts = mesh.vertices[mesh.edge_vertices]
    assert np.allclose(
        mesh.edge_length, np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
    )


def test_rectangular_domain():
    mesh = generate_structured_mesh(4, xlim=(0.0, 2.0), ylim=(-1.0, 1.0))
    assert abs(mesh.area.sum() - 4.0) < 1e-13
    assert mesh.vertices[:, 0].min() == 0.0
    assert mesh.vertices[:, 0].max() == 2.0
    assert mesh.vertices[:, 1].min() == -1.0


def test_generate_structured_mesh_validation():
    with pytest.raises(ValueError):
        generate_structured_mesh(0)
    with pytest.raises(ValueError):
        generate_structured_mesh(2, xlim=(1.0, 1.0))


def test_edge_topology_consistency(small_mesh):
    mesh = small_mesh
    # interior edges are shared by exactly two elements, boundary by one
    interior = ~mesh.boundary_edge
    assert np.all(mesh.elem_of_edge[interior] != NO_ELEM)
    assert np.all(mesh.elem_of_edge[mesh.boundary_edge, 1] == NO_ELEM)
    # elem_of_edge and side_of_elem are mutually inverse
    for k in range(mesh.num_elements):
        for n in range(3):
            e = mesh.edge_of_elem[k, n]
            side = mesh.side_of_elem[k, n]
            assert mesh.elem_of_edge[e, side - 1] == k
    # every interior edge appears in exactly two (element, side) slots
    counts = np.bincount(mesh.edge_of_elem.ravel(), minlength=mesh.num_edges)
    assert np.all(counts[interior] == 2)
    assert np.all(counts[mesh.boundary_edge] == 1)
    # local edge n sits opposite local vertex n: its endpoints are the
    # other two vertices of the element
    for k in range(mesh.num_elements):
        for n in range(3):
            e = mesh.edge_of_elem[k, n]
            others = sorted(np.delete(mesh.triangles[k], n))
            assert sorted(mesh.edge_vertices[e]) == others


def test_normals_unit_outward_antisymmetric(small_mesh):
    mesh = small_mesh
    norms = np.linalg.norm(mesh.normals, axis=2)
    assert np.allclose(norms, 1.0, atol=1e-14)
    # outward: positive dot product with centroid -> edge midpoint
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    for k in range(mesh.num_elements):
        for n in range(3):
            e = mesh.edge_of_elem[k, n]
            midpoint = mesh.vertices[mesh.edge_vertices[e]].mean(axis=0)
            assert np.dot(mesh.normals[k, n], midpoint - centroids[k]) > 0
    # antisymmetry across interior edges
    for e in np.nonzero(~mesh.boundary_edge)[0]:
        k_minus, k_plus = mesh.elem_of_edge[e]
        n_minus = int(np.nonzero(mesh.edge_of_elem[k_minus] == e)[0][0])
        n_plus = int(np.nonzero(mesh.edge_of_elem[k_plus] == e)[0][0])
        total = mesh.normals[k_minus, n_minus] + mesh.normals[k_plus, n_plus]
        assert np.max(np.abs(total)) < 1e-14


def test_elem_quad_points_affine(small_mesh):
    mesh = small_mesh
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1 / 3, 1 / 3]])
    phys = elem_quad_points(mesh, ref)
    assert phys.shape == (mesh.num_elements, 4, 2)
    verts = mesh.vertices[mesh.triangles]
    assert np.allclose(phys[:, 0], verts[:, 0])
    assert np.allclose(phys[:, 1], verts[:, 1])
    assert np.allclose(phys[:, 2], verts[:, 2])
    assert np.allclose(phys[:, 3], verts.mean(axis=1))


def test_edge_quad_points_on_edges(small_mesh):
    mesh = small_mesh
    s = np.array([0.5])
    pts = edge_quad_points(mesh, s)  # (K, 3, 1, 2)
    for k in range(mesh.num_elements):
        for n in range(3):
            e = mesh.edge_of_elem[k, n]
            midpoint = mesh.vertices[mesh.edge_vertices[e]].mean(axis=0)
            assert np.allclose(pts[k, n, 0], midpoint, atol=1e-14)


def test_classify_boundary_edges_rotation(small_mesh):
    """Against the midpoint-sign oracle for the rigid rotation field."""
    mesh = small_mesh

    def u1(t, x):
        return 0.5 - x[..., 1]

    def u2(t, x):
        return x[..., 0] - 0.5

    inflow, outflow = classify_boundary_edges(mesh, u1, u2, 0.0)
    # partition of the exterior slots
    assert not np.any(inflow & outflow)
    assert np.array_equal(inflow | outflow, mesh.exterior_mask)
    assert not np.any((inflow | outflow) & mesh.interior_mask)
    for k in range(mesh.num_elements):
        for n in range(3):
            if not mesh.exterior_mask[k, n]:
                continue
            e = mesh.edge_of_elem[k, n]
            mid = mesh.vertices[mesh.edge_vertices[e]].mean(axis=0)
            u = np.array([0.5 - mid[1], mid[0] - 0.5])
            sign = np.dot(u, mesh.normals[k, n])
            if abs(sign) > 1e-12:
                assert inflow[k, n] == (sign < 0)
            else:  # tangential flow counts as outflow: no data imposed
                assert outflow[k, n]


def test_mesh_file_round_trip(tmp_path, small_mesh):
    path = tmp_path / "grid.txt"
    write_mesh_file(small_mesh, path)
    back = read_mesh_file(path)
    assert np.allclose(back.vertices, small_mesh.vertices)
    assert np.array_equal(back.triangles, small_mesh.triangles)
    # indices are stored 1-based
    lines = path.read_text().splitlines()
    v, k = map(int, lines[0].split())
    assert (v, k) == (small_mesh.num_vertices, small_mesh.num_elements)
    first_tri = list(map(int, lines[1 + v].split()))
    assert min(first_tri) >= 1


def test_read_mesh_file_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("not a mesh\n")
    with pytest.raises(ValueError):
        read_mesh_file(bad)


def test_from_arrays_rejects_clockwise():
    vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(ValueError):
        Mesh.from_arrays(vertices, [[0, 2, 1]])


@given(st.integers(min_value=1, max_value=6))
def test_structured_mesh_euler_formula(n):
    """V - E + K = 1 for a simply connected planar triangulation."""
    mesh = generate_structured_mesh(n)
    assert mesh.num_vertices - mesh.num_edges + mesh.num_elements == 1
