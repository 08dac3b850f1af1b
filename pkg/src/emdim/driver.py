"""End-to-end orchestration: assemble the coupled system for a case,
solve it and collect diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly1d import (
    assemble_dirichlet_multiplier,
    assemble_graph_reaction,
    assemble_graph_source,
    assemble_graph_stiffness,
    assemble_tip_neumann,
    GasSplitting,
)
from .assembly3d import (
    DofLayout3D,
    assemble_divergence,
    assemble_flux_mass,
    assemble_neumann_multiplier,
    assemble_rhs_dirichlet,
    assemble_rhs_neumann,
)
from .coupling import (
    apply_average,
    assemble_coupling_cross,
    assemble_coupling_self,
    assemble_line_rhs,
    build_average_stencils,
)
from .graph import build_graph_mesh
from .mesh import generate_box_mesh
from .postproc import l2_error_cells
from .solver import (
    BlockPreconditioner,
    IdentityPreconditioner,
    assemble_global,
    extract_solution,
    gmres,
)


@dataclass
class ProblemData:
    """Coefficients and data of one coupled solve."""

    eps_s: object = 1.0
    eps_g: object = 1.0
    q_over_eps0: object = 0.0
    g: object = 0.0
    g_tip: object = 0.0
    nu: object = 0.0
    phi_bar: object = 0.0
    tip_flux_factor: float = 1.0


@dataclass
class SolverOptions:
    tol: float = 1e-10
    restart: int = 200
    max_iter: int = 2000
    precond: str = "block"          # "block" or "none"
    a_s_inverse: str = "lumped"     # "lumped" or "exact"
    shift: float = 0.0
    n_circle: int = 8
    n_quad: int = 2


@dataclass
class RunResult:
    mesh: object
    gmesh: object
    system: object
    solution: object
    report: object
    stencils: list
    splitting: object

    def phi_hat(self):
        """Circle averages of the solved cell potential at the coupling
        quadrature points."""
        return apply_average(self.stencils, self.solution.phi_cells)


def build_system(mesh, gmesh, data, options=None):
    """Assemble the coupled block system for a mesh/network pair."""
    options = options or SolverOptions()
    layout = DofLayout3D(mesh)
    a_flux = assemble_flux_mass(mesh, data.eps_s)
    div = assemble_divergence(mesh)
    mult = assemble_neumann_multiplier(mesh, layout)
    rhs_d = assemble_rhs_dirichlet(mesh, data.phi_bar)
    rhs_n = assemble_rhs_neumann(mesh, data.nu, layout)

    stiff = assemble_graph_stiffness(gmesh, data.eps_g)
    react = assemble_graph_reaction(gmesh, data.eps_g)
    rhs_graph = (assemble_graph_source(gmesh, data.q_over_eps0)
                 + assemble_tip_neumann(gmesh, data.g_tip,
                                        data.tip_flux_factor))
    gdir, gdir_vals = assemble_dirichlet_multiplier(gmesh)

    stencils = build_average_stencils(mesh, gmesh, options.n_circle,
                                      options.n_quad)
    cross = assemble_coupling_cross(stencils, gmesh.n_dof, mesh.n_tets,
                                    data.eps_g)
    self_block = assemble_coupling_self(stencils, mesh.n_tets, data.eps_g)
    rhs_line = assemble_line_rhs(stencils, mesh.n_tets, data.g)

    system = assemble_global(a_flux, div, self_block, cross, stiff, react,
                             mult, gdir, rhs_d, rhs_line, rhs_graph, rhs_n,
                             gdir_vals)
    return system, stencils


def solve_problem(mesh, net, data, options=None):
    """Assemble and solve; returns a :class:`RunResult`."""
    options = options or SolverOptions()
    gmesh = build_graph_mesh(net)
    system, stencils = build_system(mesh, gmesh, data, options)
    if options.precond == "block":
        precond = BlockPreconditioner(system, a_inverse=options.a_s_inverse,
                                      shift=options.shift)
    else:
        precond = IdentityPreconditioner()
    x, report = gmres(system, precond=precond, tol=options.tol,
                      restart=options.restart, max_iter=options.max_iter)
    solution = extract_solution(system, x)
    splitting = GasSplitting(gmesh, solution.phi_graph, data.q_over_eps0,
                             data.eps_g)
    return RunResult(mesh, gmesh, system, solution, report, stencils,
                     splitting)


def case_data(case):
    """Problem data of a manufactured or tree case."""
    return ProblemData(
        eps_s=case.eps_s,
        eps_g=case.eps_g,
        q_over_eps0=case.q_over_eps0,
        g=case.g,
        g_tip=case.g_tip,
        nu=case.nu,
        phi_bar=case.phi_bar,
        tip_flux_factor=getattr(case, "tip_flux_factor", 1.0),
    )


def tc1_mesh(case, h_far=0.1, h_near=0.01, band=0.02):
    """The graded validation mesh: refined along the tube axis."""
    poly = np.vstack(case.line)
    return generate_box_mesh(case.bounds, h_far, refine_polyline=poly,
                             h_near=h_near, band=band,
                             tag_rule=case.boundary_rule)


def solve_case(case, mesh, n_e=100, options=None):
    """Solve a case on a prebuilt mesh and attach the potential error."""
    net = case.network(n_e) if hasattr(case, "network") else case.network
    result = solve_problem(mesh, net, case_data(case), options)
    error = None
    if getattr(case, "phi_s", None) is not None:
        error = l2_error_cells(mesh, result.solution.phi_cells, case.phi_s)
    return result, error
