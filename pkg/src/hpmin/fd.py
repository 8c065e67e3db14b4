"""Derivative-free machinery: central-difference gradients and sparse
finite-difference Hessians driven by a distance-2 coloring of the pattern.

The gradient path exploits element locality: perturbing one DOF changes
the energy density only on the elements containing it, so each central
difference re-evaluates a handful of element densities instead of the
whole functional.  The Hessian needs one forward gradient difference per
color group; group members share no structurally-coupled row, so every
pattern column can be read off directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dofmap import SparsityPattern, local_layout
from .energy import BarrierError

__all__ = [
    "ColoredPattern",
    "gradient_central",
    "gradient_central_local",
    "greedy_coloring",
    "hessian_fd",
]

_PAIR_CHUNK = 1 << 16


def _steps(values: np.ndarray, h: float) -> np.ndarray:
    """Per-coordinate step h * max(1, |v_i|)."""
    return h * np.maximum(1.0, np.abs(values))


def gradient_central(energy, v: np.ndarray, h: float = 1e-6,
                     dofs=None) -> np.ndarray:
    """Naive central differences of a scalar energy over the given dofs.

    Reference implementation: every probe re-evaluates the full energy.
    """
    v = np.asarray(v, dtype=float)
    dofs = np.arange(v.size) if dofs is None else np.asarray(dofs)
    g = np.empty(dofs.size)
    for out, i in enumerate(dofs):
        hi = h * max(1.0, abs(v[i]))
        probe = v.copy()
        probe[i] = v[i] + hi
        e_up = energy(probe)
        probe[i] = v[i] - hi
        e_dn = energy(probe)
        if not (np.isfinite(e_up) and np.isfinite(e_dn)):
            raise BarrierError(f"energy not finite at probe of dof {i}")
        g[out] = (e_up - e_dn) / (2.0 * hi)
    return g


def gradient_central_local(model, v_full: np.ndarray, h: float = 1e-6,
                           dofs=None) -> np.ndarray:
    """Central differences re-evaluating only the touched elements.

    ``model`` provides ``local_coeffs``, ``element_energies_local``,
    ``b_full`` and ``dofmap``; the result matches :func:`gradient_central`
    on the corresponding full energy up to summation order.
    """
    v_full = np.asarray(v_full, dtype=float)
    dm = model.dofmap
    dofs = np.arange(dm.n_dofs) if dofs is None else np.asarray(dofs)

    cols, signs = local_layout(dm)
    flat_dofs = cols.ravel()
    order = np.argsort(flat_dofs, kind="stable")
    sorted_dofs = flat_dofs[order]
    starts = np.searchsorted(sorted_dofs, dofs, side="left")
    ends = np.searchsorted(sorted_dofs, dofs, side="right")

    # one (element, local slot) pair per occurrence of each requested dof
    counts = ends - starts
    owner = np.repeat(np.arange(dofs.size), counts)
    flat_idx = order[np.concatenate([np.arange(s, e) for s, e in zip(starts, ends)])]
    pair_elem, pair_slot = np.divmod(flat_idx, cols.shape[1])
    pair_sign = signs[pair_elem, pair_slot]

    base = model.local_coeffs(v_full)
    steps = _steps(v_full[dofs], h)
    diff = np.zeros(dofs.size)
    for lo in range(0, owner.size, _PAIR_CHUNK):
        sl = slice(lo, min(lo + _PAIR_CHUNK, owner.size))
        elems, slots = pair_elem[sl], pair_slot[sl]
        delta = pair_sign[sl] * steps[owner[sl]]
        probe = base[elems].copy()
        rows = np.arange(elems.size)
        center = probe[rows, slots].copy()
        probe[rows, slots] = center + delta
        e_up = model.element_energies_local(elems, probe)
        probe[rows, slots] = center - delta
        e_dn = model.element_energies_local(elems, probe)
        if not (np.all(np.isfinite(e_up)) and np.all(np.isfinite(e_dn))):
            raise BarrierError("energy not finite at a finite-difference probe")
        np.add.at(diff, owner[sl], e_up - e_dn)
    return diff / (2.0 * steps) - model.b_full[dofs]


@dataclass(frozen=True)
class ColoredPattern:
    """Distance-2 coloring of a sparsity pattern.

    DOFs in one group share no structurally-nonzero row, so a single
    gradient difference recovers all of their Hessian columns.
    """

    pattern: SparsityPattern
    groups: np.ndarray
    n_groups: int


def greedy_coloring(pattern: SparsityPattern) -> ColoredPattern:
    """Sequential greedy distance-2 coloring in natural DOF order."""
    adj = pattern.to_csr()
    indptr, indices = adj.indptr, adj.indices
    groups = -np.ones(pattern.n, dtype=np.int64)
    for i in range(pattern.n):
        nbrs = indices[indptr[i]:indptr[i + 1]]
        two_hop = np.concatenate([indices[indptr[k]:indptr[k + 1]] for k in nbrs])
        used = groups[two_hop]
        used = set(used[used >= 0].tolist())
        color = 0
        while color in used:
            color += 1
        groups[i] = color
    return ColoredPattern(pattern=pattern, groups=groups,
                          n_groups=int(groups.max()) + 1)


def hessian_fd(grad, v: np.ndarray, colored: ColoredPattern,
               h: float = 1e-6, g0: np.ndarray | None = None) -> sp.csr_matrix:
    """Sparse symmetric Hessian estimate from grouped forward differences.

    For each color group one evaluates grad(v + steps on the group) and
    scatters the difference into the pattern columns of that group;
    entries outside the pattern are discarded and the result is
    symmetrized.  ``grad`` acts on vectors of the same layout as ``v``.
    """
    v = np.asarray(v, dtype=float)
    pattern = colored.pattern
    if v.size != pattern.n:
        raise ValueError(f"expected vector of length {pattern.n}, got {v.size}")
    if g0 is None:
        g0 = grad(v)
    steps = _steps(v, h)
    diffs = np.empty((colored.n_groups, pattern.n))
    for group in range(colored.n_groups):
        members = colored.groups == group
        probe = v.copy()
        probe[members] += steps[members]
        diffs[group] = grad(probe) - g0
    data = (diffs[colored.groups[pattern.cols], pattern.rows]
            / steps[pattern.cols])
    H = sp.csr_matrix((data, (pattern.rows, pattern.cols)),
                      shape=(pattern.n, pattern.n))
    return ((H + H.T) * 0.5).tocsr()
