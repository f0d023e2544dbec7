"""Finite-dimensional families of deformed meshes."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import TetInversion
from ..mesh.deform import (DeformationField, dilation_field, spherical_harmonic_field, torus_fourier_field,
                           translation_field)
from ..mesh.tetmesh import TetMesh, signed_volumes


@dataclass(frozen=True, eq=False)
class ShapeFamily:
    """Meshes base + sum_i c_i X_i for a list of deformation fields X_i.

    The map c -> vertices is affine, so c = 0 is the base mesh and the
    derivative along c_i is exactly the displacement X_i.
    """

    base: TetMesh
    fields: tuple
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if not self.names:
            object.__setattr__(self, "names", tuple(f.description or f"field_{i}" for i, f in enumerate(self.fields)))
        for f in self.fields:
            if f.volumetric_displacement.shape != self.base.vertices.shape:
                raise ValueError("every field must displace the vertices of the base mesh")

    @property
    def dimension(self) -> int:
        return len(self.fields)

    @property
    def displacements(self) -> np.ndarray:
        """(n_fields, n_vertices, 3) stack of displacements."""
        if not self.fields:
            return np.zeros((0,) + self.base.vertices.shape)
        return np.stack([f.volumetric_displacement for f in self.fields])

    def vertices(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.dimension,):
            raise ValueError(f"parameter vector must have length {self.dimension}")
        return self.base.vertices + np.tensordot(c, self.displacements, axes=1) if self.dimension else self.base.vertices

    def mesh(self, c) -> TetMesh:
        """Mesh at parameters c; raises TetInversion if a tetrahedron flips."""
        c = np.asarray(c, dtype=float)
        if not np.any(c):
            return self.base
        v = self.vertices(c)
        bad = np.nonzero(signed_volumes(v, self.base.tets) <= 0)[0]
        if len(bad):
            raise TetInversion(bad, float(np.linalg.norm(c)))
        return self.base.with_vertices(v)

    def rebased(self, c) -> "ShapeFamily":
        """Same displacement fields around the mesh at c (parameters restart at 0)."""
        return ShapeFamily(self.mesh(c), self.fields, self.names)

    def save_fields(self, path) -> Path:
        p = Path(path)
        np.savez(p, displacements=self.displacements, names=np.array(self.names))
        return p

    @classmethod
    def from_saved(cls, base: TetMesh, path) -> "ShapeFamily":
        data = np.load(path)
        disp = data["displacements"]
        names = tuple(str(n) for n in data["names"])
        bv = base.topology.boundary_vertices
        fields = [DeformationField(np.einsum("ij,ij->i", d[bv], base.vertex_normals), d, n)
                  for d, n in zip(disp, names)]
        return cls(base, tuple(fields), names)


def spherical_harmonic_family(mesh: TetMesh, l_max: int = 4, l_min: int = 1, include_dilation: bool = False,
                              center=None) -> ShapeFamily:
    """Normal speeds Y_lm . nu for l_min <= l <= l_max (harmonically extended)."""
    fields = []
    if include_dilation:
        fields.append(dilation_field(mesh, center))
    for l in range(l_min, l_max + 1):
        for m in range(-l, l + 1):
            fields.append(spherical_harmonic_field(mesh, l, m, center))
    return ShapeFamily(mesh, tuple(fields))


def torus_fourier_family(mesh: TetMesh, R: float, n_long_max: int = 2, n_mer_max: int = 1,
                         include_dilation: bool = False) -> ShapeFamily:
    """Double-Fourier normal speeds cos/sin(a phi + b theta) on a torus about the z-axis."""
    fields = [dilation_field(mesh)] if include_dilation else []
    for a in range(0, n_long_max + 1):
        for b in range(-n_mer_max, n_mer_max + 1):
            if a == 0 and b < 0:
                continue
            fields.append(torus_fourier_field(mesh, R, a, b, "cos"))
            if a or b:
                fields.append(torus_fourier_field(mesh, R, a, b, "sin"))
    return ShapeFamily(mesh, tuple(fields))


def rigid_family(mesh: TetMesh, origin=None) -> ShapeFamily:
    """Dilation plus the three translations."""
    fields = [dilation_field(mesh, origin)] + [translation_field(mesh, e) for e in np.eye(3)]
    return ShapeFamily(mesh, tuple(fields), ("dilation", "translate_x", "translate_y", "translate_z"))


def dilation_family(mesh: TetMesh, origin=None) -> ShapeFamily:
    return ShapeFamily(mesh, (dilation_field(mesh, origin),), ("dilation",))
