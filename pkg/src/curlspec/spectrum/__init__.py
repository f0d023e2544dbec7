from .lagrangian import LagrangianSpec
from .constraints import ConstraintHandle, assemble_curl, constraint_space, constraint_space_for_mesh
from .solver import (EigenResult, HarmonicFields, check_selfadjointness, cluster_multiplicity, harmonic_fields,
                     lowest_positive, richardson_gap_tol, solve_spectrum)

__all__ = ["LagrangianSpec", "ConstraintHandle", "assemble_curl", "constraint_space", "constraint_space_for_mesh",
           "EigenResult", "HarmonicFields", "check_selfadjointness", "cluster_multiplicity", "harmonic_fields",
           "lowest_positive", "richardson_gap_tol", "solve_spectrum"]
