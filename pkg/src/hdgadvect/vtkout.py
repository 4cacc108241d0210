"""Legacy ASCII VTK output.

Each triangle contributes its own three corner points, so the
discontinuous field is written exactly as computed: jumps between
neighboring elements stay visible instead of being averaged away.
"""

from __future__ import annotations

import os

import numpy as np

from .mesh import Mesh
from .problems import eval_solution

__all__ = ["write_vtk"]

_REF_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_SQRT2 = float(np.sqrt(2.0))


def write_vtk(mesh: Mesh, basis, coeffs: np.ndarray, path,
              field_name: str = "c") -> None:
    """Write the solution as an unstructured triangle grid with duplicated
    corner points, the corner values as point data, and the element means
    as cell data.  The file is written to a temporary name and renamed so
    no partial file is ever visible."""
    k = mesh.num_elements
    corners = mesh.vertices[mesh.triangles]                 # (K, 3, 2)
    corner_vals = eval_solution(mesh, basis.p, coeffs, _REF_CORNERS)
    # The first basis function is the constant sqrt(2), so the element
    # mean is sqrt(2) times the leading coefficient.
    means = _SQRT2 * coeffs.reshape(k, -1)[:, 0]

    lines = [
        "# vtk DataFile Version 3.0",
        "hdgadvect solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {3 * k} double",
    ]
    for point in corners.reshape(-1, 2):
        lines.append(f"{point[0]:.15e} {point[1]:.15e} 0.0")
    lines.append(f"CELLS {k} {4 * k}")
    for cell in range(k):
        base = 3 * cell
        lines.append(f"3 {base} {base + 1} {base + 2}")
    lines.append(f"CELL_TYPES {k}")
    lines.extend(["5"] * k)
    lines.append(f"POINT_DATA {3 * k}")
    lines.append(f"SCALARS {field_name} double 1")
    lines.append("LOOKUP_TABLE default")
    for value in corner_vals.reshape(-1):
        lines.append(f"{value:.15e}")
    lines.append(f"CELL_DATA {k}")
    lines.append(f"SCALARS {field_name}_mean double 1")
    lines.append("LOOKUP_TABLE default")
    for value in means:
        lines.append(f"{value:.15e}")

    path = os.fspath(path)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="ascii") as handle:
            handle.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
