from .family import (ShapeFamily, dilation_family, rigid_family, spherical_harmonic_family,
                     torus_fourier_family)
from .functional import Evaluation, GradientResult, ShapeProblem, gradient, normalized_eigenvalue
from .certificate import (ExtremalityReport, cone_decompose, constancy_residual, density_matrices,
                          extremality_certificate, first_eigenvalue_residual)
from .optimize import OptimizationResult, optimize, safe_gradient

__all__ = ["ShapeFamily", "dilation_family", "rigid_family", "spherical_harmonic_family", "torus_fourier_family",
           "Evaluation", "GradientResult", "ShapeProblem", "gradient", "normalized_eigenvalue",
           "ExtremalityReport", "cone_decompose", "constancy_residual", "density_matrices",
           "extremality_certificate", "first_eigenvalue_residual", "OptimizationResult", "optimize",
           "safe_gradient"]
