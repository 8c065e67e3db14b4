"""Ready-to-minimize problems for the two benchmark functionals."""

from __future__ import annotations

import numpy as np

from .basis import tabulate
from .dofmap import DirichletSpec, build_dofmap, expand_solution, sparsity_pattern
from .energy import NeoHookeModel, PLaplaceModel, identity_deformation
from .fd import gradient_central_local
from .mesh import QuadMesh, geometry_factors
from .quadrature import rule_for_degree
from .solver import EnergyProblem

__all__ = ["plaplace_problem", "neohooke_problem"]


def _free_callbacks(model, fd_step: float):
    dm = model.dofmap

    def energy(v_free):
        return model.energy(expand_solution(dm, v_free))

    def gradient(v_free):
        return model.gradient(expand_solution(dm, v_free))[dm.free_dofs]

    def gradient_fd(v_free):
        v_full = expand_solution(dm, v_free)
        return gradient_central_local(model, v_full, h=fd_step,
                                      dofs=dm.free_dofs)

    return energy, gradient, gradient_fd


def plaplace_problem(mesh: QuadMesh, p: int, alpha: float, f: float,
                     g=0.0, tags=("boundary",),
                     fd_step: float = 1e-6) -> tuple[EnergyProblem, PLaplaceModel]:
    """Power-law diffusion with Dirichlet data g on the tagged boundary.

    Starts from the zero vector (admissible for g = 0).
    """
    rule = rule_for_degree(p)
    geo = geometry_factors(mesh, rule, tabulate(p, rule.points))
    dm = build_dofmap(mesh, p, components=1,
                      dirichlet=DirichletSpec(tuple(tags), g))
    model = PLaplaceModel(geo, dm, alpha=alpha, f=f)
    energy, gradient, gradient_fd = _free_callbacks(model, fd_step)
    problem = EnergyProblem(
        energy=energy, gradient=gradient, gradient_fd=gradient_fd,
        pattern=sparsity_pattern(dm), x0=np.zeros(dm.n_free),
        name=f"plaplace(p={p}, alpha={alpha})",
    )
    return problem, model


def neohooke_problem(mesh: QuadMesh, p: int, young: float, poisson: float,
                     f, fixed_tags=("left", "bottom"),
                     fd_step: float = 1e-6) -> tuple[EnergyProblem, NeoHookeModel]:
    """Compressible Neo-Hookean elasticity, deformation pinned to the
    identity on the tagged boundary parts, starting from the identity map."""
    rule = rule_for_degree(p)
    geo = geometry_factors(mesh, rule, tabulate(p, rule.points))
    dm = build_dofmap(mesh, p, components=2,
                      dirichlet=DirichletSpec(tuple(fixed_tags),
                                              lambda x, y: (x, y)))
    model = NeoHookeModel.from_young_poisson(geo, dm, young=young,
                                             poisson=poisson, f=f)
    energy, gradient, gradient_fd = _free_callbacks(model, fd_step)
    problem = EnergyProblem(
        energy=energy, gradient=gradient, gradient_fd=gradient_fd,
        pattern=sparsity_pattern(dm),
        x0=identity_deformation(dm)[dm.free_dofs],
        name=f"neohooke(p={p})",
    )
    return problem, model
