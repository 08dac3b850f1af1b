"""Coupled 3D-1D electrostatics: dual-mixed tetrahedral FEM coupled through
circle averages to a P1 discretization of an embedded 1D network."""

from .cases import tc1_case, tc2_case, tc3_case, verify_manufactured
from .config import RunConfig, load_config
from .driver import ProblemData, SolverOptions, solve_case, solve_problem
from .graph import Network1D, build_graph_mesh, generate_random_tree
from .mesh import TetMesh, boundary_classify, generate_box_mesh, load_gmsh, locate_point
from .solver import BlockPreconditioner, assemble_global, extract_solution, gmres

__version__ = "0.1.0"

__all__ = [
    "BlockPreconditioner",
    "Network1D",
    "ProblemData",
    "RunConfig",
    "SolverOptions",
    "TetMesh",
    "assemble_global",
    "boundary_classify",
    "build_graph_mesh",
    "extract_solution",
    "generate_box_mesh",
    "generate_random_tree",
    "gmres",
    "load_config",
    "load_gmsh",
    "locate_point",
    "solve_case",
    "solve_problem",
    "tc1_case",
    "tc2_case",
    "tc3_case",
    "verify_manufactured",
]
