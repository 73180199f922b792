"""Harmonic mortar coupling of annular stator/rotor Poisson problems.

Spline discretizations of two concentric rings are glued across a circular
air-gap interface by trigonometric Lagrange multipliers.  The package
assembles and solves the resulting saddle-point system and measures its
discrete inf-sup constant against the closed-form annulus value.
"""
from .geometry import AnnulusGeometry, PolarMesh, build_mesh, mesh_at_level, polar_map
from .harmonics import HarmonicSpace, assemble_coupling, gram, rotation_blocks
from .infsup import (InfSupResult, analytic_beta, discrete_infsup, infsup_sweep,
                     min_generalized_eig, schur_complement)
from .saddle import (InfSupViolation, Manufactured, SaddleSystem, SolveResult, assemble_system,
                     solve, sweep_rotation)
from .splines import (SourceSpec, SplineSpace1D, SplineSpace2D, assemble_rhs, assemble_stiffness,
                      l2_project_trace, sector_field, trace_matrix)

__all__ = [
    "AnnulusGeometry", "PolarMesh", "build_mesh", "mesh_at_level", "polar_map",
    "HarmonicSpace", "assemble_coupling", "gram", "rotation_blocks",
    "InfSupResult", "analytic_beta", "discrete_infsup", "infsup_sweep",
    "min_generalized_eig", "schur_complement",
    "InfSupViolation", "Manufactured", "SaddleSystem", "SolveResult", "assemble_system",
    "solve", "sweep_rotation",
    "SourceSpec", "SplineSpace1D", "SplineSpace2D", "assemble_rhs", "assemble_stiffness",
    "l2_project_trace", "sector_field", "trace_matrix",
]
__version__ = "0.1.0"
