"""Global degree-of-freedom bookkeeping for hierarchical quad elements.

Three element-indexed tables tie the mesh topology to the global basis:
the per-DOF kind labels, the element-to-DOF incidence aligned with the
local shape ordering, and the per-entry signs that repair odd-degree edge
modes whose element-local direction opposes the global (ascending node
index) edge direction.

Global numbering is blocked: nodal DOFs by node index, then edge DOFs by
edge index and degree, then bubbles by element; vector problems repeat
the whole layout per component (all x-DOFs, then all y-DOFs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import Bubble, EdgeMode, Nodal, n_bubbles, shape_kinds, tabulate
from .mesh import QuadMesh

__all__ = [
    "DirichletSpec",
    "DofMap",
    "SparsityPattern",
    "build_dofmap",
    "sparsity_pattern",
    "expand_solution",
    "local_layout",
    "sample_field",
]


@dataclass(frozen=True)
class DirichletSpec:
    """Boundary selection by tags plus the boundary value g.

    ``tags`` may contain generator tags ("left", "hole", ...) or the
    built-in "boundary" for the whole boundary.  ``g`` is a constant
    (scalar, or a length-``components`` sequence) or a callable
    ``g(x, y)`` returning the same.  Nodal DOFs on selected nodes are
    fixed to g evaluated there; edge modes on selected boundary edges are
    fixed to zero (exact whenever g restricted to the edge is linear);
    bubbles are never fixed.
    """

    tags: tuple[str, ...] = ("boundary",)
    g: object = 0.0


@dataclass
class DofMap:
    """Global DOF layout for one mesh and uniform degree p."""

    mesh: QuadMesh
    p: int
    components: int
    n_p: int                  # scalar global basis count
    dof_kind: tuple           # scalar layout: ("node", n) / ("edge", e, k) / ("bubble", t, i, j)
    elems2dofs: np.ndarray    # (T, n_p_ref) scalar DOF ids, ShapeTable order
    signs: np.ndarray         # (T, n_p_ref) entries +-1
    free_dofs: np.ndarray
    fixed_dofs: np.ndarray
    fixed_values: np.ndarray
    free_index: np.ndarray = field(repr=False)  # full id -> free id or -1

    @property
    def n_dofs(self) -> int:
        return self.n_p * self.components

    @property
    def n_free(self) -> int:
        return self.free_dofs.size


def _resolve_g(g, xy: np.ndarray, components: int) -> np.ndarray:
    """Evaluate the boundary datum at the rows of xy, -> (len(xy), components)."""
    if callable(g):
        vals = np.array([np.atleast_1d(np.asarray(g(x, y), dtype=float))
                         for x, y in xy])
    else:
        vals = np.tile(np.atleast_1d(np.asarray(g, dtype=float)), (len(xy), 1))
    if vals.shape[1] != components:
        raise ValueError(
            f"boundary value has {vals.shape[1]} components, expected {components}"
        )
    return vals


def _selected_boundary(mesh: QuadMesh, tags) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and boundary edges picked by a tag list."""
    chosen = []
    for tag in tags:
        if tag == "boundary":
            chosen.append(mesh.boundary_nodes)
        elif tag in mesh.node_tags:
            chosen.append(mesh.node_tags[tag])
        else:
            known = ["boundary", *mesh.node_tags]
            raise ValueError(f"unknown boundary tag {tag!r}; known: {known}")
    nodes = np.unique(np.concatenate(chosen)) if chosen else np.array([], dtype=int)
    mask = np.zeros(mesh.n_nodes, dtype=bool)
    mask[nodes] = True
    edge_nodes = mesh.edges2nodes[mesh.boundary_edges]
    covered = mask[edge_nodes[:, 0]] & mask[edge_nodes[:, 1]]
    return nodes, mesh.boundary_edges[covered]


def build_dofmap(mesh: QuadMesh, p: int, components: int = 1,
                 dirichlet: DirichletSpec | None = None) -> DofMap:
    """Enumerate global DOFs and constraints for uniform degree p."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if components not in (1, 2):
        raise ValueError(f"components must be 1 or 2, got {components}")

    kinds = shape_kinds(p)
    nb = n_bubbles(p)
    n_nodes, n_edges, n_elems = mesh.n_nodes, mesh.n_edges, mesh.n_elems
    edge_base = n_nodes
    bubble_base = n_nodes + (p - 1) * n_edges
    n_p = bubble_base + n_elems * nb

    dof_kind = [("node", n) for n in range(n_nodes)]
    for e in range(n_edges):
        dof_kind.extend(("edge", e, k) for k in range(2, p + 1))
    bubble_kinds = [(b.i, b.j) for b in kinds if isinstance(b, Bubble)]
    for t in range(n_elems):
        dof_kind.extend(("bubble", t, i, j) for i, j in bubble_kinds)

    elems2dofs = np.empty((n_elems, len(kinds)), dtype=np.int64)
    signs = np.ones((n_elems, len(kinds)))
    nxt = np.roll(mesh.elems2nodes, -1, axis=1)
    bubble_count = 0
    for m, kind in enumerate(kinds):
        if isinstance(kind, Nodal):
            elems2dofs[:, m] = mesh.elems2nodes[:, kind.node]
        elif isinstance(kind, EdgeMode):
            s, k = kind.edge, kind.degree
            elems2dofs[:, m] = (edge_base
                                + mesh.elems2edges[:, s] * (p - 1) + (k - 2))
            if k % 2 == 1:
                against = mesh.elems2nodes[:, s] > nxt[:, s]
                signs[against, m] = -1.0
        else:
            elems2dofs[:, m] = (bubble_base + np.arange(n_elems) * nb
                                + bubble_count)
            bubble_count += 1

    n_dofs = n_p * components
    fixed_mask = np.zeros(n_dofs, dtype=bool)
    fixed_values_full = np.zeros(n_dofs)
    if dirichlet is not None:
        sel_nodes, sel_edges = _selected_boundary(mesh, dirichlet.tags)
        if sel_nodes.size:
            gvals = _resolve_g(dirichlet.g, mesh.nodes[sel_nodes], components)
            for c in range(components):
                ids = c * n_p + sel_nodes
                fixed_mask[ids] = True
                fixed_values_full[ids] = gvals[:, c]
        for e in sel_edges:
            for k in range(2, p + 1):
                for c in range(components):
                    fixed_mask[c * n_p + edge_base + e * (p - 1) + (k - 2)] = True

    fixed_dofs = np.where(fixed_mask)[0]
    free_dofs = np.where(~fixed_mask)[0]
    free_index = -np.ones(n_dofs, dtype=np.int64)
    free_index[free_dofs] = np.arange(free_dofs.size)
    return DofMap(
        mesh=mesh, p=p, components=components, n_p=n_p,
        dof_kind=tuple(dof_kind), elems2dofs=elems2dofs, signs=signs,
        free_dofs=free_dofs, fixed_dofs=fixed_dofs,
        fixed_values=fixed_values_full[fixed_dofs], free_index=free_index,
    )


@dataclass(frozen=True)
class SparsityPattern:
    """Structural nonzeros of the free-DOF Hessian, sorted by (row, col)."""

    n: int
    rows: np.ndarray
    cols: np.ndarray

    @property
    def nnz(self) -> int:
        return self.rows.size

    def to_csr(self, values=None) -> sp.csr_matrix:
        data = np.ones(self.nnz) if values is None else values
        return sp.csr_matrix((data, (self.rows, self.cols)), shape=(self.n, self.n))


def sparsity_pattern(dofmap: DofMap) -> SparsityPattern:
    """Free DOFs i, j are coupled iff they co-occur in some element.

    For vector problems all components of an element's DOFs co-occur, so
    the pattern is the scalar pattern tiled ``components`` x ``components``
    before the free-DOF restriction.
    """
    n_elems = dofmap.mesh.n_elems
    cols = np.concatenate(
        [dofmap.elems2dofs + c * dofmap.n_p for c in range(dofmap.components)],
        axis=1,
    )
    rows = np.repeat(np.arange(n_elems), cols.shape[1])
    inc = sp.csr_matrix(
        (np.ones(cols.size), (rows, cols.ravel())),
        shape=(n_elems, dofmap.n_dofs),
    )
    coupled = (inc.T @ inc).tocoo()
    fi = dofmap.free_index
    r, c = fi[coupled.row], fi[coupled.col]
    keep = (r >= 0) & (c >= 0)
    r, c = r[keep], c[keep]
    order = np.lexsort((c, r))
    return SparsityPattern(n=dofmap.n_free, rows=r[order], cols=c[order])


def expand_solution(dofmap: DofMap, free_vector) -> np.ndarray:
    """Insert fixed boundary values into a free-DOF vector."""
    free_vector = np.asarray(free_vector, dtype=float)
    if free_vector.shape != (dofmap.n_free,):
        raise ValueError(
            f"expected {dofmap.n_free} free values, got {free_vector.shape}"
        )
    full = np.empty(dofmap.n_dofs)
    full[dofmap.free_dofs] = free_vector
    full[dofmap.fixed_dofs] = dofmap.fixed_values
    return full


def local_layout(dofmap: DofMap) -> tuple[np.ndarray, np.ndarray]:
    """Element incidence and signs tiled over components.

    Returns (cols, signs), both (n_elems, n_p_ref * components), with the
    component blocks concatenated: local slot c * n_p_ref + m addresses
    global DOF elems2dofs[t, m] + c * n_p.
    """
    cols = np.concatenate(
        [dofmap.elems2dofs + c * dofmap.n_p for c in range(dofmap.components)],
        axis=1,
    )
    signs = np.tile(dofmap.signs, (1, dofmap.components))
    return cols, signs


def sample_field(dofmap: DofMap, v_full: np.ndarray, ref_points,
                 component: int = 0) -> np.ndarray:
    """Evaluate the expansion on every element at reference points.

    Returns (n_elems, n_points) values of the selected component.
    """
    table = tabulate(dofmap.p, ref_points)
    dofs = dofmap.elems2dofs + component * dofmap.n_p
    coeff = dofmap.signs * v_full[dofs]
    return coeff @ table.values
