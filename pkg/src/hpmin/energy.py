"""Discrete energy functionals and their explicit gradients.

Two models share one evaluation scheme: gather signed local coefficients,
form gradient fields at the quadrature points, integrate a pointwise
density with the precomputed weights, and subtract the linear load term
``b . v`` assembled once up front.

* scalar power-law diffusion: (1/alpha) integral |grad v|^alpha - integral f v
* vector compressible Neo-Hookean elasticity with stored density
  W(F) = C1 (|F|^2 - 2 - 2 log det F) + D1 (det F - 1)^2, where v holds
  deformation coefficients and F is its gradient.  det F <= 0 anywhere
  turns the energy into +inf, so step rejection in the minimizer handles
  the orientation barrier automatically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dofmap import DofMap, local_layout
from .mesh import GeometryFactors

__all__ = [
    "BarrierError",
    "ScalarGradField",
    "DeformationField",
    "PLaplaceModel",
    "NeoHookeModel",
    "assemble_load",
    "evaluate_gradfield",
    "identity_deformation",
]


class BarrierError(ArithmeticError):
    """Gradient requested at a configuration with non-positive det F."""


@dataclass(frozen=True)
class ScalarGradField:
    """Partial derivatives of a scalar field at all quadrature points, (T, n_ip)."""

    v_x: np.ndarray
    v_y: np.ndarray


@dataclass(frozen=True)
class DeformationField:
    """Deformation-gradient components at all quadrature points, (T, n_ip)."""

    f11: np.ndarray
    f12: np.ndarray
    f21: np.ndarray
    f22: np.ndarray

    @property
    def det(self) -> np.ndarray:
        return self.f11 * self.f22 - self.f12 * self.f21

    @property
    def frobenius2(self) -> np.ndarray:
        return self.f11**2 + self.f12**2 + self.f21**2 + self.f22**2


def assemble_load(geometry: GeometryFactors, dofmap: DofMap, f) -> np.ndarray:
    """Load vector of a constant source: b[i] = integral f phi_i.

    ``f`` is a scalar (1 component) or a length-2 sequence; both fixed and
    free entries are populated.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if f.shape != (dofmap.components,):
        raise ValueError(f"expected {dofmap.components} load components, got {f.shape}")
    # integral of each local shape function over each element
    cell = np.einsum("tq,mq->tm", geometry.wdetj, geometry.phi) * dofmap.signs
    b = np.empty(dofmap.n_dofs)
    for c in range(dofmap.components):
        b[c * dofmap.n_p:(c + 1) * dofmap.n_p] = np.bincount(
            dofmap.elems2dofs.ravel(), weights=(f[c] * cell).ravel(),
            minlength=dofmap.n_p,
        )
    return b


def identity_deformation(dofmap: DofMap) -> np.ndarray:
    """Coefficients of the identity map: nodal DOFs = coordinates, rest 0."""
    if dofmap.components != 2:
        raise ValueError("identity deformation needs a 2-component DofMap")
    v = np.zeros(dofmap.n_dofs)
    nodes = dofmap.mesh.nodes
    for c in range(2):
        v[c * dofmap.n_p: c * dofmap.n_p + nodes.shape[0]] = nodes[:, c]
    return v


class _ModelBase:
    """Shared gather/scatter plumbing over one geometry and DOF map."""

    def __init__(self, geometry: GeometryFactors, dofmap: DofMap, f):
        if geometry.n_elems != dofmap.mesh.n_elems:
            raise ValueError("geometry and dofmap belong to different meshes")
        self.geometry = geometry
        self.dofmap = dofmap
        self.b_full = assemble_load(geometry, dofmap, f)
        self._cols, self._signs = local_layout(dofmap)

    @property
    def n_local(self) -> int:
        return self._cols.shape[1]

    def local_coeffs(self, v_full: np.ndarray) -> np.ndarray:
        """Signed element-local coefficients, (T, n_local)."""
        v_full = np.asarray(v_full, dtype=float)
        if v_full.shape != (self.dofmap.n_dofs,):
            raise ValueError(
                f"expected coefficient vector of length {self.dofmap.n_dofs}, "
                f"got {v_full.shape}"
            )
        return self._signs * v_full[self._cols]

    def scatter(self, g_loc: np.ndarray) -> np.ndarray:
        """Accumulate signed local contributions into a full vector."""
        return np.bincount(
            self._cols.ravel(),
            weights=(self._signs * g_loc).ravel(),
            minlength=self.dofmap.n_dofs,
        )

    def element_energies(self, v_full: np.ndarray) -> np.ndarray:
        """Per-element density integrals (no load term), (T,)."""
        return self.element_energies_local(
            slice(None), self.local_coeffs(v_full)
        )

    def energy(self, v_full: np.ndarray) -> float:
        dens = self.element_energies(v_full)
        if not np.all(np.isfinite(dens)):
            return np.inf
        return float(dens.sum() - self.b_full @ v_full)


class PLaplaceModel(_ModelBase):
    """Power-law diffusion energy (1/alpha) integral |grad v|^alpha - integral f v."""

    def __init__(self, geometry: GeometryFactors, dofmap: DofMap,
                 alpha: float, f: float):
        if not alpha > 1.0:
            raise ValueError(f"alpha must be > 1 for a unique minimizer, got {alpha}")
        if dofmap.components != 1:
            raise ValueError("scalar model needs a 1-component DofMap")
        super().__init__(geometry, dofmap, f)
        self.alpha = float(alpha)
        self.f = float(f)

    def gradfield(self, v_full: np.ndarray) -> ScalarGradField:
        v_loc = self.local_coeffs(v_full)
        return ScalarGradField(
            v_x=np.einsum("tm,tqm->tq", v_loc, self.geometry.dphi_x),
            v_y=np.einsum("tm,tqm->tq", v_loc, self.geometry.dphi_y),
        )

    def element_energies_local(self, elems, v_loc: np.ndarray) -> np.ndarray:
        """Density integrals for the selected elements with given coefficients."""
        dx = np.einsum("pm,pqm->pq", v_loc, self.geometry.dphi_x[elems])
        dy = np.einsum("pm,pqm->pq", v_loc, self.geometry.dphi_y[elems])
        dens = (dx * dx + dy * dy) ** (self.alpha / 2.0) / self.alpha
        return np.einsum("pq,pq->p", self.geometry.wdetj[elems], dens)

    def gradient(self, v_full: np.ndarray) -> np.ndarray:
        field = self.gradfield(v_full)
        norm2 = field.v_x**2 + field.v_y**2
        if self.alpha < 2.0 and np.any(norm2 == 0.0):
            raise ValueError(
                "singular gradient: |grad v| = 0 at a quadrature point with alpha < 2"
            )
        # |grad v|^(alpha-2), with the analytic limit 0 at grad v = 0
        scale = np.zeros_like(norm2)
        pos = norm2 > 0.0
        scale[pos] = norm2[pos] ** ((self.alpha - 2.0) / 2.0)
        wx = self.geometry.wdetj * scale * field.v_x
        wy = self.geometry.wdetj * scale * field.v_y
        g_loc = (np.einsum("tq,tqm->tm", wx, self.geometry.dphi_x)
                 + np.einsum("tq,tqm->tm", wy, self.geometry.dphi_y))
        return self.scatter(g_loc) - self.b_full


class NeoHookeModel(_ModelBase):
    """Compressible Neo-Hookean stored energy over deformation coefficients."""

    def __init__(self, geometry: GeometryFactors, dofmap: DofMap,
                 c1: float, d1: float, f):
        if c1 <= 0.0 or d1 <= 0.0:
            raise ValueError(f"material constants must be positive, got {c1}, {d1}")
        if dofmap.components != 2:
            raise ValueError("elasticity model needs a 2-component DofMap")
        super().__init__(geometry, dofmap, f)
        self.c1 = float(c1)
        self.d1 = float(d1)
        self.f_vec = np.atleast_1d(np.asarray(f, dtype=float))

    @classmethod
    def from_young_poisson(cls, geometry, dofmap, young: float, poisson: float, f):
        """Standard identification C1 = mu/2, D1 = K/2 from (E, nu)."""
        mu = young / (2.0 * (1.0 + poisson))
        bulk = young / (3.0 * (1.0 - 2.0 * poisson))
        return cls(geometry, dofmap, c1=mu / 2.0, d1=bulk / 2.0, f=f)

    def _fields(self, elems, v_loc: np.ndarray) -> DeformationField:
        m = self.n_local // 2
        v1, v2 = v_loc[:, :m], v_loc[:, m:]
        dpx = self.geometry.dphi_x[elems]
        dpy = self.geometry.dphi_y[elems]
        return DeformationField(
            f11=np.einsum("pm,pqm->pq", v1, dpx),
            f12=np.einsum("pm,pqm->pq", v1, dpy),
            f21=np.einsum("pm,pqm->pq", v2, dpx),
            f22=np.einsum("pm,pqm->pq", v2, dpy),
        )

    def gradfield(self, v_full: np.ndarray) -> DeformationField:
        return self._fields(slice(None), self.local_coeffs(v_full))

    def density(self, field: DeformationField) -> np.ndarray:
        """Pointwise stored energy, +inf where the deformation inverts."""
        det = field.det
        dens = np.full(det.shape, np.inf)
        ok = det > 0.0
        det_ok = det[ok]
        dens[ok] = (self.c1 * (field.frobenius2[ok] - 2.0 - 2.0 * np.log(det_ok))
                    + self.d1 * (det_ok - 1.0) ** 2)
        return dens

    def element_energies_local(self, elems, v_loc: np.ndarray) -> np.ndarray:
        dens = self.density(self._fields(elems, v_loc))
        wd = self.geometry.wdetj[elems]
        out = np.full(dens.shape[0], np.inf)
        ok = np.all(np.isfinite(dens), axis=1)
        out[ok] = np.einsum("pq,pq->p", wd[ok], dens[ok])
        return out

    def gradient(self, v_full: np.ndarray) -> np.ndarray:
        field = self.gradfield(v_full)
        det = field.det
        if np.any(det <= 0.0):
            raise BarrierError("gradient requested at an inverted configuration")
        # first Piola stress P = 2 C1 (F - F^{-T}) + 2 D1 (det F - 1) det F F^{-T}
        coef = (2.0 * self.d1 * (det - 1.0) * det - 2.0 * self.c1) / det
        p11 = 2.0 * self.c1 * field.f11 + coef * field.f22
        p12 = 2.0 * self.c1 * field.f12 - coef * field.f21
        p21 = 2.0 * self.c1 * field.f21 - coef * field.f12
        p22 = 2.0 * self.c1 * field.f22 + coef * field.f11
        wd = self.geometry.wdetj
        g1 = (np.einsum("tq,tqm->tm", wd * p11, self.geometry.dphi_x)
              + np.einsum("tq,tqm->tm", wd * p12, self.geometry.dphi_y))
        g2 = (np.einsum("tq,tqm->tm", wd * p21, self.geometry.dphi_x)
              + np.einsum("tq,tqm->tm", wd * p22, self.geometry.dphi_y))
        return self.scatter(np.concatenate([g1, g2], axis=1)) - self.b_full


def evaluate_gradfield(model, v_full):
    """Gradient components of the expansion at all quadrature points."""
    return model.gradfield(v_full)
