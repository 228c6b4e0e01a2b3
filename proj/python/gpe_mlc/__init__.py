"""Finite element ground states of the Gross-Pitaevskii equation.

Thin wrapper over the C++ core: mesh construction and refinement, P1
assembly, the multilevel-correction multigrid eigensolver, the direct
fine-grid baseline, and the ZZ/Dorfler adaptive machinery.
"""

from ._core import (
    EigenPair,
    Hierarchy,
    Mesh,
    ProblemSpec,
    Prolongation,
    ScfConfig,
    SparseMatrix,
    assemble_mass,
    assemble_nonlinear,
    assemble_potential,
    assemble_stiffness,
    build_hierarchy,
    build_lshape,
    build_unit_square,
    dorfler_mark,
    multigrid_scheme,
    nondimensionalize,
    solve_direct,
    zz_estimate,
)

__all__ = [
    "EigenPair",
    "Hierarchy",
    "Mesh",
    "ProblemSpec",
    "Prolongation",
    "ScfConfig",
    "SparseMatrix",
    "assemble_mass",
    "assemble_nonlinear",
    "assemble_potential",
    "assemble_stiffness",
    "build_hierarchy",
    "build_lshape",
    "build_unit_square",
    "dorfler_mark",
    "multigrid_scheme",
    "nondimensionalize",
    "solve_direct",
    "zz_estimate",
]

__version__ = "0.1.0"
