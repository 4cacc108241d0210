"""Triangulations of rectangular domains and their edge skeleton.

The mesh is the index home of the whole discretization: element-local edge
n (0-based here, opposite local vertex n) maps to a global skeleton edge
via ``edge_of_elem``, and each global edge knows its one or two adjacent
elements via ``elem_of_edge``.  Slot 0 of ``elem_of_edge`` ("inner"
element) is always populated; slot 1 is ``NO_ELEM`` on the boundary.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .basis import map_ref_edge, quad_rule_1d

NO_ELEM = -1

__all__ = [
    "NO_ELEM",
    "Mesh",
    "generate_structured_mesh",
    "build_edge_topology",
    "compute_geometry",
    "classify_boundary_edges",
    "edge_quad_points",
    "elem_quad_points",
    "read_mesh_file",
    "write_mesh_file",
]


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray        # (V, 2)
    triangles: np.ndarray       # (K, 3) vertex indices, counterclockwise
    edge_vertices: np.ndarray   # (Kbar, 2) sorted vertex pairs
    edge_of_elem: np.ndarray    # (K, 3) global edge index per local edge
    elem_of_edge: np.ndarray    # (Kbar, 2); slot 1 NO_ELEM on boundary
    side_of_elem: np.ndarray    # (K, 3) in {1, 2}
    normals: np.ndarray         # (K, 3, 2) outward unit normals
    area: np.ndarray            # (K,)
    edge_length: np.ndarray     # (Kbar,)
    jacobian: np.ndarray        # (K, 2, 2) affine maps B_k
    boundary_edge: np.ndarray   # (Kbar,) bool
    interior_mask: np.ndarray = field(init=False)   # (K, 3) bool
    exterior_mask: np.ndarray = field(init=False)   # (K, 3) bool

    def __post_init__(self):
        ext = self.boundary_edge[self.edge_of_elem]
        object.__setattr__(self, "exterior_mask", ext)
        object.__setattr__(self, "interior_mask", ~ext)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_elements(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edge_vertices.shape[0]

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "Mesh":
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        edge_vertices, edge_of_elem, elem_of_edge, side_of_elem = build_edge_topology(
            triangles, vertices
        )
        normals, area, edge_length, jacobian = compute_geometry(
            vertices, triangles, edge_vertices
        )
        return cls(
            vertices,
            triangles,
            edge_vertices,
            edge_of_elem,
            elem_of_edge,
            side_of_elem,
            normals,
            area,
            edge_length,
            jacobian,
            elem_of_edge[:, 1] == NO_ELEM,
        )


def generate_structured_mesh(
    cells_per_side: int, xlim=(0.0, 1.0), ylim=(0.0, 1.0)
) -> Mesh:
    """Friedrichs-Keller triangulation of an axis-aligned rectangle.

    Every square cell is split along its lower-left -> upper-right
    diagonal into two counterclockwise triangles, K = 2 * cells_per_side^2.
    """
    n = int(cells_per_side)
    if n < 1:
        raise ValueError("cells_per_side must be >= 1")
    x0, x1 = map(float, xlim)
    y0, y1 = map(float, ylim)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle")

    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    gx, gy = np.meshgrid(xs, ys)                     # row-major in y
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    k = 0
    for iy in range(n):
        for ix in range(n):
            a = iy * (n + 1) + ix
            b = a + 1
            c = a + n + 2
            d = a + n + 1
            triangles[k] = (a, b, c)       # lower-right triangle
            triangles[k + 1] = (a, c, d)   # upper-left triangle
            k += 2
    return Mesh.from_arrays(vertices, triangles)


def build_edge_topology(triangles, vertices):
    """Enumerate unique edges and the element<->edge index mappings.

    Edges are numbered by sorting their (min vertex, max vertex) pairs
    lexicographically, which makes the numbering reproducible.  The
    "inner" adjacency slot of an interior edge holds the smaller element
    index.  Raises on non-conforming input (an edge shared by more than
    two triangles).
    """
    triangles = np.asarray(triangles, dtype=np.int64)
    num_elem = triangles.shape[0]
    if triangles.size and triangles.max() >= len(vertices):
        raise ValueError("triangle references a vertex that does not exist")

    # local edge n joins local vertices n+1 and n+2 (mod 3)
    pair_per_edge = triangles[:, [[1, 2], [2, 0], [0, 1]]].reshape(-1, 2)
    pair_sorted = np.sort(pair_per_edge, axis=1)
    edge_vertices, edge_index = np.unique(pair_sorted, axis=0, return_inverse=True)
    edge_index = edge_index.ravel()
    num_edges = edge_vertices.shape[0]

    counts = np.bincount(edge_index, minlength=num_edges)
    if counts.max(initial=0) > 2:
        bad = edge_vertices[int(np.argmax(counts))]
        raise ValueError(
            f"non-conforming mesh: edge between vertices {bad[0]} and {bad[1]} "
            f"is shared by {counts.max()} triangles"
        )

    # stable sort by edge keeps element-major order, so for each edge the
    # first incidence is the smaller element index
    order = np.argsort(edge_index, kind="stable")
    sorted_edges = edge_index[order]
    elems = np.repeat(np.arange(num_elem), 3)[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_edges[1:] != sorted_edges[:-1]
    slot = np.where(first, 0, 1)

    elem_of_edge = np.full((num_edges, 2), NO_ELEM, dtype=np.int64)
    elem_of_edge[sorted_edges, slot] = elems

    edge_of_elem = edge_index.reshape(num_elem, 3)
    side_of_elem = np.where(
        elem_of_edge[edge_of_elem, 0] == np.arange(num_elem)[:, None], 1, 2
    )
    return edge_vertices, edge_of_elem, elem_of_edge, side_of_elem


def compute_geometry(vertices, triangles, edge_vertices):
    """Affine maps, areas, outward normals, and edge lengths.

    Rejects degenerate or clockwise triangles (det B_k must be positive).
    """
    vertices = np.asarray(vertices, dtype=float)
    corners = vertices[triangles]                        # (K, 3, 2)
    jacobian = np.stack(
        [corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]], axis=-1
    )
    det = np.linalg.det(jacobian)
    if np.any(det <= 0):
        k = int(np.argmax(det <= 0))
        raise ValueError(
            f"element {k} is degenerate or clockwise (det B = {det[k]:.3e})"
        )
    area = 0.5 * det

    # local edge n runs from corner n+1 to corner n+2; rotating the tangent
    # by -90 degrees points outward for counterclockwise elements
    tangents = corners[:, [2, 0, 1]] - corners[:, [1, 2, 0]]   # (K, 3, 2)
    lengths = np.linalg.norm(tangents, axis=-1)
    normals = np.stack([tangents[..., 1], -tangents[..., 0]], axis=-1)
    normals /= lengths[..., None]

    edge_vec = vertices[edge_vertices[:, 1]] - vertices[edge_vertices[:, 0]]
    edge_length = np.linalg.norm(edge_vec, axis=-1)
    return normals, area, edge_length, jacobian


def elem_quad_points(mesh: Mesh, ref_points: np.ndarray) -> np.ndarray:
    """Physical images F_k(q_r) of reference points, shape (K, R, 2)."""
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    return np.einsum("kab,rb->kra", mesh.jacobian, ref_points) + x0[:, None, :]


def edge_quad_points(mesh: Mesh, s: np.ndarray) -> np.ndarray:
    """Physical images F_k(gamma_n(s_r)), shape (K, 3, R, 2)."""
    ref = np.stack([map_ref_edge(n, s) for n in (1, 2, 3)])     # (3, R, 2)
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    return np.einsum("kab,nrb->knra", mesh.jacobian, ref) + x0[:, None, None, :]


def classify_boundary_edges(mesh: Mesh, u1, u2, t: float, rule=None):
    """Split exterior element-local edges into inflow and outflow masks.

    An exterior edge is inflow when the quadrature mean of u . nu at time
    t is negative; ties (tangential or zero flow) count as outflow so that
    no boundary data is imposed there.  Interior edges are in neither
    mask.  Returns (inflow, outflow) boolean arrays of shape (K, 3).
    """
    if rule is None:
        rule = quad_rule_1d(3)
    points = edge_quad_points(mesh, rule.points)                # (K, 3, R, 2)
    u_dot_n = (
        u1(t, points) * mesh.normals[..., 0:1]
        + u2(t, points) * mesh.normals[..., 1:2]
    )
    mean = u_dot_n @ rule.weights                               # (K, 3)
    # a balanced (tangential) edge must land on the outflow side even when
    # cancellation leaves the mean at roundoff level below zero
    tie = 1e-13 * np.max(np.abs(u_dot_n), axis=-1)
    inflow = mesh.exterior_mask & (mean < -tie)
    outflow = mesh.exterior_mask & ~(mean < -tie)
    return inflow, outflow


# --------------------------------------------------------------------------
# Plain-text mesh exchange format: header "V K", V vertex lines "x y",
# K triangle lines "i1 i2 i3" with 1-based counterclockwise indices.

def write_mesh_file(mesh: Mesh, path) -> None:
    lines = [f"{mesh.num_vertices} {mesh.num_elements}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_mesh_file(path) -> Mesh:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing mesh header")
    num_vertices, num_elements = int(tokens[0]), int(tokens[1])
    expected = 2 + 2 * num_vertices + 3 * num_elements
    if len(tokens) != expected:
        raise ValueError(
            f"{path}: expected {expected} whitespace-separated values, "
            f"found {len(tokens)}"
        )
    values = iter(tokens[2:])
    vertices = np.array(
        [[float(next(values)), float(next(values))] for _ in range(num_vertices)]
    )
    triangles = (
        np.array(
            [
                [int(next(values)), int(next(values)), int(next(values))]
                for _ in range(num_elements)
            ],
            dtype=np.int64,
        )
        - 1
    )
    return Mesh.from_arrays(vertices, triangles)
