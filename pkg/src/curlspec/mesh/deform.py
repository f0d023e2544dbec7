"""Deformation fields: boundary normal speeds with a volumetric extension.

A deformation moves vertices only; connectivity, tags and the cached
topology are shared with the undeformed mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.special import sph_harm_y

from ..errors import HarmonicExtensionError, MeshError, TetInversion
from .tetmesh import TetMesh, signed_volumes


@dataclass(frozen=True, eq=False)
class DeformationField:
    """Vertex displacement X with its boundary normal speed f = X . nu.

    ``boundary_speed`` rows follow ``mesh.topology.boundary_vertices``.
    """

    boundary_speed: np.ndarray
    volumetric_displacement: np.ndarray
    description: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("boundary_speed", "volumetric_displacement"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def scaled(self, s: float) -> "DeformationField":
        return DeformationField(s * self.boundary_speed, s * self.volumetric_displacement,
                                f"{s:g}*({self.description})", dict(self.params))

    def __add__(self, other: "DeformationField") -> "DeformationField":
        return DeformationField(self.boundary_speed + other.boundary_speed,
                                self.volumetric_displacement + other.volumetric_displacement,
                                f"{self.description} + {other.description}")

    def normal_defect(self, mesh: TetMesh) -> float:
        """Relative mismatch between X . nu at boundary vertices and the stored speed."""
        xb = self.volumetric_displacement[mesh.topology.boundary_vertices]
        fn = np.einsum("ij,ij->i", xb, mesh.vertex_normals)
        scale = max(np.abs(self.boundary_speed).max(initial=0.0), 1e-300)
        return float(np.abs(fn - self.boundary_speed).max(initial=0.0) / scale)


def zero_field(mesh: TetMesh) -> DeformationField:
    return DeformationField(np.zeros(len(mesh.topology.boundary_vertices)),
                            np.zeros_like(mesh.vertices), "zero")


def deform(mesh: TetMesh, field: DeformationField, t: float) -> TetMesh:
    """Mesh with vertices moved by t * X; raises TetInversion on non-positive volumes."""
    x = field.volumetric_displacement
    if x.shape != mesh.vertices.shape:
        raise MeshError("displacement shape does not match the mesh")
    if t == 0:
        return mesh
    new = mesh.vertices + t * x
    vol = signed_volumes(new, mesh.tets)
    bad = np.nonzero(vol <= 0)[0]
    if len(bad):
        raise TetInversion(bad, t)
    return mesh.with_vertices(new)


def vertex_laplacian(mesh: TetMesh) -> sp.csr_matrix:
    """Piecewise-linear stiffness matrix (d0^T M1 d0 with Whitney M1)."""
    from ..complex.cochain import element_matrices, sorted_coordinates

    topo = mesh.topology
    x = sorted_coordinates(mesh)
    loc = element_matrices(x)
    g, vol = loc["grads"], loc["vol"]
    k = vol[:, None, None] * np.einsum("tic,tjc->tij", g, g)
    ids = topo.sorted_tets
    rows = np.repeat(ids, 4, axis=1).ravel()
    cols = np.tile(ids, (1, 4)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((k.ravel(), (rows, cols)), shape=(n, n))


def extend_displacement(mesh: TetMesh, boundary_values: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Componentwise discrete harmonic extension of boundary-vertex vectors (nb, d)."""
    topo = mesh.topology
    bv = topo.boundary_vertices
    inner = np.nonzero(~topo.is_boundary_vertex)[0]
    b = np.asarray(boundary_values, dtype=float).reshape(len(bv), -1)
    out = np.zeros((mesh.n_vertices, b.shape[1]))
    out[bv] = b
    if len(inner) == 0 or not np.any(b):
        return out
    lap = vertex_laplacian(mesh)
    a = lap[inner][:, inner].tocsc()
    rhs = -(lap[inner][:, bv] @ b)
    x = sla.splu(a).solve(rhs)
    res = np.linalg.norm(a @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(res) or res > tol:
        raise HarmonicExtensionError(float(res))
    out[inner] = x
    return out


def harmonic_extension(mesh: TetMesh, boundary_speed, description: str = "harmonic extension") -> DeformationField:
    """Extend the boundary displacement f * nu to the volume by a discrete Laplace solve."""
    f = np.asarray(boundary_speed, dtype=float)
    nb = len(mesh.topology.boundary_vertices)
    if f.shape != (nb,):
        raise MeshError(f"boundary speed must have one value per boundary vertex ({nb}), got shape {f.shape}")
    disp = extend_displacement(mesh, f[:, None] * mesh.vertex_normals)
    return DeformationField(f, disp, description)


def dilation_field(mesh: TetMesh, origin=None) -> DeformationField:
    """X = x - origin; deform(mesh, X, t) scales about the origin by 1 + t."""
    o = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    x = mesh.vertices - o
    f = np.einsum("ij,ij->i", x[mesh.topology.boundary_vertices], mesh.vertex_normals)
    return DeformationField(f, x, "dilation", {"origin": o.tolist()})


def translation_field(mesh: TetMesh, direction=(1.0, 0.0, 0.0)) -> DeformationField:
    """Rigid translation X = e (constant)."""
    e = np.asarray(direction, dtype=float)
    x = np.broadcast_to(e, mesh.vertices.shape).copy()
    return DeformationField(mesh.vertex_normals @ e, x, "translation", {"direction": e.tolist()})


def real_spherical_harmonic(l: int, m: int, points: np.ndarray) -> np.ndarray:
    """Orthonormal real spherical harmonic Y_lm evaluated at the directions of ``points``."""
    if abs(m) > l:
        raise ValueError("need |m| <= l")
    p = np.asarray(points, dtype=float)
    r = np.linalg.norm(p, axis=1)
    theta = np.arccos(np.clip(p[:, 2] / np.where(r > 0, r, 1.0), -1.0, 1.0))
    phi = np.arctan2(p[:, 1], p[:, 0])
    y = sph_harm_y(l, abs(m), theta, phi)
    if m == 0:
        return y.real
    if m > 0:
        return np.sqrt(2.0) * (-1) ** m * y.real
    return np.sqrt(2.0) * (-1) ** m * y.imag


def spherical_harmonic_field(mesh: TetMesh, l: int, m: int, center=None) -> DeformationField:
    """Normal speed Y_lm(direction from center) with its harmonic volume extension."""
    c = mesh.vertices.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    bv = mesh.topology.boundary_vertices
    f = real_spherical_harmonic(l, m, mesh.vertices[bv] - c)
    name = f"Y({l},{m})"
    out = harmonic_extension(mesh, f, name)
    return DeformationField(out.boundary_speed, out.volumetric_displacement, name, {"l": l, "m": m, "center": c.tolist()})


def torus_fourier_field(mesh: TetMesh, R: float, n_long: int, n_mer: int, kind: str = "cos") -> DeformationField:
    """Normal speed cos or sin of (n_long * phi + n_mer * theta) on a torus about the z-axis.

    phi is the angle around the z-axis and theta the angle around the core
    circle of radius R.
    """
    bv = mesh.topology.boundary_vertices
    p = mesh.vertices[bv]
    phi = np.arctan2(p[:, 1], p[:, 0])
    rho = np.hypot(p[:, 0], p[:, 1])
    theta = np.arctan2(p[:, 2], rho - R)
    arg = n_long * phi + n_mer * theta
    if kind == "cos":
        f = np.cos(arg)
    elif kind == "sin":
        f = np.sin(arg)
    else:
        raise ValueError("kind must be 'cos' or 'sin'")
    name = f"{kind}({n_long}phi+{n_mer}theta)"
    out = harmonic_extension(mesh, f, name)
    return DeformationField(out.boundary_speed, out.volumetric_displacement, name,
                            {"R": R, "n_long": n_long, "n_mer": n_mer, "kind": kind})


def random_boundary_field(mesh: TetMesh, rng: np.random.Generator, l_max: int = 4, l_min: int = 1,
                          amplitude: float = 1.0, center=None) -> DeformationField:
    """Random combination of real spherical harmonics, normalized to max |f| = amplitude."""
    c = mesh.vertices.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    bv = mesh.topology.boundary_vertices
    dirs = mesh.vertices[bv] - c
    f = np.zeros(len(bv))
    coeffs = {}
    for l in range(l_min, l_max + 1):
        for m in range(-l, l + 1):
            a = rng.standard_normal()
            coeffs[f"{l},{m}"] = float(a)
            f += a * real_spherical_harmonic(l, m, dirs)
    f *= amplitude / max(np.abs(f).max(), 1e-300)
    out = harmonic_extension(mesh, f, "random harmonic speed")
    return DeformationField(out.boundary_speed, out.volumetric_displacement, "random harmonic speed",
                            {"l_min": l_min, "l_max": l_max, "coefficients": coeffs})
