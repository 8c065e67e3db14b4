"""Legacy ASCII VTK output (unstructured grids of QUAD cells)."""

from __future__ import annotations

import numpy as np

from .basis import tabulate
from .dofmap import DofMap, sample_field
from .mesh import QuadMesh

__all__ = ["write_vtk", "mesh_to_vtk", "solution_grid"]

QUAD_CELL_TYPE = 9


def write_vtk(path, points, cells, point_data=None, cell_data=None,
              title="hpmin output"):
    """Write 2D points and quad connectivity as a legacy VTK file.

    ``point_data`` / ``cell_data`` map field names to flat arrays.
    """
    points = np.asarray(points, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(points)} double",
    ]
    lines.extend(f"{x:.12g} {y:.12g} 0" for x, y in points)
    lines.append(f"CELLS {len(cells)} {5 * len(cells)}")
    lines.extend("4 " + " ".join(map(str, quad)) for quad in cells)
    lines.append(f"CELL_TYPES {len(cells)}")
    lines.extend(str(QUAD_CELL_TYPE) for _ in range(len(cells)))
    for header, data in (("POINT_DATA", point_data), ("CELL_DATA", cell_data)):
        if not data:
            continue
        count = len(points) if header == "POINT_DATA" else len(cells)
        lines.append(f"{header} {count}")
        for name, values in data.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.12g}" for v in np.asarray(values, dtype=float))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def mesh_to_vtk(mesh: QuadMesh, path, point_data=None, cell_data=None):
    """Export the mesh itself (nodes + elements)."""
    write_vtk(path, mesh.nodes, mesh.elems2nodes,
              point_data=point_data, cell_data=cell_data)


def solution_grid(dofmap: DofMap, v_full: np.ndarray, n_sub: int):
    """Sample the scalar expansion on per-element display subgrids.

    Each element contributes an independent (n_sub x n_sub)-point patch of
    QUAD cells, so the high-order field content survives in a format that
    only knows bilinear cells.  Returns (points, cells, values).
    """
    if n_sub < 2:
        raise ValueError("need at least a 2 x 2 sampling grid")
    t = np.linspace(-1.0, 1.0, n_sub)
    xi, eta = np.meshgrid(t, t, indexing="ij")
    ref = np.column_stack([xi.ravel(), eta.ravel()])
    values = sample_field(dofmap, v_full, ref)  # (T, n_sub^2)

    q1 = tabulate(1, ref)
    corners = dofmap.mesh.nodes[dofmap.mesh.elems2nodes]  # (T, 4, 2)
    phys = np.einsum("mq,tmd->tqd", q1.values, corners)   # (T, n_sub^2, 2)

    base = np.arange(dofmap.mesh.n_elems)[:, None] * (n_sub * n_sub)
    i, j = np.meshgrid(np.arange(n_sub - 1), np.arange(n_sub - 1), indexing="ij")
    ll = (i * n_sub + j).ravel()
    patch = np.stack([ll, ll + n_sub, ll + n_sub + 1, ll + 1], axis=1)
    cells = (base[:, :, None] + patch[None, :, :]).reshape(-1, 4)
    return phys.reshape(-1, 2), cells, values.ravel()
