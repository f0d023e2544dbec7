from .cochain import (CochainComplex, build_complex, element_matrices, interpolate_edge_field, interpolate_face_field,
                      tet_centroid_field, vertex_field, whitney_field)
from .homology import (HomologyBasis, boundary_cohomology, crossing_number, cycle_intersection_matrix, homology_basis,
                       period_vector, spanning_tree, weak_flux)
from .snf import integer_kernel, invariant_factors, smith_normal_form, solve_integer

__all__ = ["CochainComplex", "build_complex", "element_matrices", "interpolate_edge_field", "interpolate_face_field",
           "tet_centroid_field", "vertex_field", "whitney_field", "HomologyBasis", "boundary_cohomology",
           "crossing_number", "cycle_intersection_matrix", "homology_basis", "period_vector", "spanning_tree",
           "weak_flux", "integer_kernel", "invariant_factors", "smith_normal_form", "solve_integer"]
