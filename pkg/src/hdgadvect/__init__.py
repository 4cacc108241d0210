"""Hybridized discontinuous Galerkin solver for 2D linear advection on
triangular meshes, with DIRK implicit time stepping and Schur-complement
static condensation."""

from .basis import (
    BasisSet,
    QuadRule1D,
    QuadRule2D,
    ReferenceBlocks,
    compute_bases_on_quad,
    eval_basis_1d,
    eval_basis_2d,
    integrate_reference_blocks,
    map_ref_edge,
    num_basis_2d,
    quad_rule_1d,
    quad_rule_triangle,
)
from .mesh import (
    Mesh,
    classify_boundary_edges,
    generate_structured_mesh,
    read_mesh_file,
    write_mesh_file,
)
from .assembly import SystemBlocks, StageMatrices, build_system
from .condensation import (
    BlockInversionError,
    CondensedSolver,
    SchurSolveError,
    StageSystem,
    blkinv,
    condense_and_solve,
    default_block_size,
)
from .timestepping import DirkTableau, dirk_step, dirk_tableau, solve_steady
from .problems import (
    ProblemDefinition,
    builtin_testcase,
    cells_for_level,
    compute_eoc,
    compute_l2_error,
    eval_solution,
    project_initial,
)
from .driver import PhaseError, RunConfig, RunReport, SweepResult, run, run_sweep
from .report import ConvergenceRow, emit_convergence_table
from .vtkout import write_vtk

__version__ = "0.1.0"

__all__ = [
    "BasisSet", "QuadRule1D", "QuadRule2D", "ReferenceBlocks",
    "compute_bases_on_quad", "eval_basis_1d", "eval_basis_2d",
    "integrate_reference_blocks", "map_ref_edge", "num_basis_2d",
    "quad_rule_1d", "quad_rule_triangle",
    "Mesh", "classify_boundary_edges", "generate_structured_mesh",
    "read_mesh_file", "write_mesh_file",
    "SystemBlocks", "StageMatrices", "build_system",
    "BlockInversionError", "CondensedSolver", "SchurSolveError",
    "StageSystem", "blkinv", "condense_and_solve", "default_block_size",
    "DirkTableau", "dirk_step", "dirk_tableau", "solve_steady",
    "ProblemDefinition", "builtin_testcase", "cells_for_level",
    "compute_eoc", "compute_l2_error", "eval_solution", "project_initial",
    "PhaseError", "RunConfig", "RunReport", "SweepResult", "run", "run_sweep",
    "ConvergenceRow", "emit_convergence_table", "write_vtk",
    "__version__",
]
