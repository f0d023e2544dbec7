from .tetmesh import TetMesh, Topology
from .generators import generate_ball, generate_solid_torus, generate_handlebody
from .deform import (DeformationField, deform, harmonic_extension, dilation_field, translation_field,
                     spherical_harmonic_field, torus_fourier_field, random_boundary_field, zero_field)
from .io import read_mesh, read_tmesh, read_gmsh, write_tmesh

__all__ = ["TetMesh", "Topology", "generate_ball", "generate_solid_torus", "generate_handlebody",
           "DeformationField", "deform", "harmonic_extension", "dilation_field", "translation_field",
           "spherical_harmonic_field", "torus_fourier_field", "random_boundary_field", "zero_field",
           "read_mesh", "read_tmesh", "read_gmsh", "write_tmesh"]
