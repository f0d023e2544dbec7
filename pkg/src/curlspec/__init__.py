"""Curl spectra under Lagrangian boundary conditions on tetrahedral meshes."""

__version__ = "0.1.0"
