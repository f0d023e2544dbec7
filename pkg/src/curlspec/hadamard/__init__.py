from .density import (BoundaryDensity, BoundaryQuadrature, boundary_density, boundary_quadrature, boundary_values,
                      cross_term, discrete_derivative_matrix, hadamard_matrix, normal_speed, pair_scale,
                      shape_derivative, volume_derivative)
from .tracking import ClusterState, TrackedBranch, aligned_basis, base_cluster, deformed_handle, solve_cluster, track_family
from .fdcheck import FDReport, fd_check

__all__ = ["BoundaryDensity", "BoundaryQuadrature", "boundary_density", "boundary_quadrature", "boundary_values",
           "cross_term", "discrete_derivative_matrix", "hadamard_matrix", "normal_speed", "pair_scale",
           "shape_derivative", "volume_derivative", "ClusterState", "TrackedBranch", "aligned_basis",
           "base_cluster", "deformed_handle", "solve_cluster", "track_family", "FDReport", "fd_check"]
