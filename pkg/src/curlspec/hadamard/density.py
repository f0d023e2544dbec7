"""Boundary densities of eigenfields and first-order shape sensitivities.

Boundary integrals use a 6-point degree-4 triangle rule on every boundary
face. Fields are the Whitney interpolants of edge proxies evaluated in the
tetrahedron owning the face, so the full vector (including its small
discrete normal component) enters |u|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..complex.cochain import CochainComplex, element_matrices, sorted_coordinates, whitney_field
from ..errors import ZeroEigenvalue
from ..mesh.deform import DeformationField
from ..mesh.tetmesh import LOCAL_FACES

# Dunavant degree-4 rule: barycentric points and weights (weights sum to 1)
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
TRI_POINTS = np.array([[_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
                       [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2]])
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)

# relative size of |lambda| * |D|^(1/3) below which an eigenvalue counts as zero
ZERO_EIGENVALUE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    """Quadrature points on the outward-oriented boundary triangles of a mesh.

    ``tet_bary`` (q, nf, 4) are barycentric coordinates in the sorted vertex
    order of the owning tet; ``tri_bary`` (q, 3) refer to the vertices of
    ``triangles``; ``weights`` (q,) sum to 1 and are multiplied by ``areas``.
    """

    triangles: np.ndarray
    tets: np.ndarray
    tet_bary: np.ndarray
    tri_bary: np.ndarray
    weights: np.ndarray
    areas: np.ndarray
    normals: np.ndarray
    points: np.ndarray

    @property
    def n_faces(self) -> int:
        return len(self.areas)

    def integrate(self, values: np.ndarray) -> float | complex:
        """Integral over the boundary of per-point values (nf, q)."""
        return (values * self.weights[None, :] * self.areas[:, None]).sum()


def boundary_quadrature(complex_: CochainComplex) -> BoundaryQuadrature:
    mesh = complex_.mesh
    topo = complex_.topology
    tri = topo.boundary_triangles
    tets = topo.boundary_face_tet
    st = topo.sorted_tets[tets]
    # column of each triangle vertex inside the sorted tet
    col = np.stack([np.argmax(st == tri[:, k:k + 1], axis=1) for k in range(3)], axis=1)
    nf = len(tri)
    bary = np.zeros((len(TRI_WEIGHTS), nf, 4))
    rows = np.arange(nf)
    for q, p in enumerate(TRI_POINTS):
        for k in range(3):
            bary[q, rows, col[:, k]] = p[k]
    nrm = mesh.boundary_face_normals
    areas = mesh.boundary_face_areas
    pts = np.einsum("qk,nkc->qnc", TRI_POINTS, mesh.vertices[tri])
    return BoundaryQuadrature(tri, tets, bary, TRI_POINTS, TRI_WEIGHTS, areas,
                              nrm / (2.0 * areas[:, None]), pts)


def boundary_values(complex_: CochainComplex, quad: BoundaryQuadrature, v: np.ndarray) -> np.ndarray:
    """Whitney interpolant of edge field(s) at the quadrature points: (q, nf, 3[, k])."""
    return np.stack([whitney_field(complex_, v, quad.tets, b) for b in quad.tet_bary])


@dataclass(frozen=True, eq=False)
class BoundaryDensity:
    """|u|^2 of one eigenfield on the boundary.

    ``values`` is the face average of |u|^2, ``point_values`` (nf, q) the
    quadrature samples and ``total`` the boundary integral.
    """

    values: np.ndarray
    point_values: np.ndarray
    areas: np.ndarray
    total: float
    quadrature: BoundaryQuadrature


def boundary_density(complex_: CochainComplex, v: np.ndarray, quad: BoundaryQuadrature | None = None) -> BoundaryDensity:
    """Boundary density of an M1-normalized edge proxy v."""
    quad = boundary_quadrature(complex_) if quad is None else quad
    u = boundary_values(complex_, quad, np.asarray(v))
    pv = np.einsum("qnc,qnc->nq", u.conj(), u).real
    return BoundaryDensity(pv @ quad.weights, pv, quad.areas, float(quad.integrate(pv)), quad)


def normal_speed(quad: BoundaryQuadrature, f, mesh=None) -> np.ndarray:
    """Normal speed at the quadrature points, (nf, q).

    ``f`` may be a DeformationField (its vertex displacement dotted with the
    face normal: the exact normal velocity of the polyhedral boundary), an
    array with one value per boundary vertex (linear on each face), an array
    already of shape (nf, q), a callable ``f(points, normals)`` or a scalar.
    """
    nq, nf = len(quad.weights), quad.n_faces
    if isinstance(f, DeformationField):
        x = f.volumetric_displacement[quad.triangles]                  # (nf, 3, 3)
        xq = np.einsum("qk,nkc->nqc", quad.tri_bary, x)
        return np.einsum("nqc,nc->nq", xq, quad.normals)
    if callable(f):
        pts = np.transpose(quad.points, (1, 0, 2)).reshape(-1, 3)
        nrm = np.repeat(quad.normals, nq, axis=0)
        return np.asarray(f(pts, nrm), float).reshape(nf, nq)
    a = np.asarray(f, dtype=float)
    if a.ndim == 0:
        return np.full((nf, nq), float(a))
    if a.shape == (nf, nq):
        return a
    if mesh is None:
        raise ValueError("per-vertex speeds need the mesh to locate boundary vertices")
    bv = mesh.topology.boundary_vertices
    if a.shape != (len(bv),):
        raise ValueError(f"speed has shape {a.shape}; expected ({len(bv)},) or ({nf}, {nq})")
    full = np.zeros(mesh.n_vertices)
    full[bv] = a
    return full[quad.triangles] @ quad.tri_bary.T


def shape_derivative(eigenvalue: float, density: BoundaryDensity, f, mesh=None) -> float:
    """-lambda * integral of f |u|^2 over the boundary."""
    fq = normal_speed(density.quadrature, f, mesh)
    return float(-eigenvalue * density.quadrature.integrate(fq * density.point_values))


def _check_nonzero(eigenvalue, complex_):
    if eigenvalue is None:
        return
    scale = complex_.mesh.volume() ** (1.0 / 3.0)
    if abs(eigenvalue) * scale < ZERO_EIGENVALUE_TOL:
        raise ZeroEigenvalue(f"eigenvalue {eigenvalue:.3e} lies in the harmonic kernel")


def cross_term(complex_: CochainComplex, u: np.ndarray, w: np.ndarray, f, eigenvalue: float | None = None,
               quad: BoundaryQuadrature | None = None) -> complex | float:
    """Integral of f (conj(u) . w) over the boundary for two edge proxies.

    Raises ZeroEigenvalue when the shared eigenvalue is numerically zero.
    """
    _check_nonzero(eigenvalue, complex_)
    quad = boundary_quadrature(complex_) if quad is None else quad
    uq = boundary_values(complex_, quad, np.asarray(u))
    wq = boundary_values(complex_, quad, np.asarray(w))
    fq = normal_speed(quad, f, complex_.mesh)
    val = quad.integrate(fq * np.einsum("qnc,qnc->nq", uq.conj(), wq))
    return complex(val) if np.iscomplexobj(val) else float(val)


def pair_scale(complex_: CochainComplex, u: np.ndarray, w: np.ndarray, f,
               quad: BoundaryQuadrature | None = None) -> float:
    """Integral of |f| |u| |w| over the boundary (the natural size of a cross term)."""
    quad = boundary_quadrature(complex_) if quad is None else quad
    uq = boundary_values(complex_, quad, np.asarray(u))
    wq = boundary_values(complex_, quad, np.asarray(w))
    fq = np.abs(normal_speed(quad, f, complex_.mesh))
    mag = np.linalg.norm(uq, axis=2).T * np.linalg.norm(wq, axis=2).T
    return float(quad.integrate(fq * mag))


def hadamard_matrix(complex_: CochainComplex, vectors: np.ndarray, eigenvalue: float, f,
                    quad: BoundaryQuadrature | None = None) -> np.ndarray:
    """-lambda * integral of f conj(u_i) . u_j for the columns of ``vectors``.

    For an orthonormal basis of one eigenspace its eigenvalues are the
    one-sided branch derivatives and its eigenvectors the aligned basis.
    """
    _check_nonzero(eigenvalue, complex_)
    quad = boundary_quadrature(complex_) if quad is None else quad
    uq = boundary_values(complex_, quad, np.asarray(vectors).reshape(len(vectors), -1))
    fq = normal_speed(quad, f, complex_.mesh)
    g = np.einsum("nq,q,n,qnci,qncj->ij", fq, quad.weights, quad.areas, uq.conj(), uq)
    g = -eigenvalue * (g + g.conj().T) / 2
    return g.real if not np.iscomplexobj(vectors) else g


# --------------------------------------------------------------------------
# exact derivatives of the discrete model


def _complex_step_elements(complex_: CochainComplex, displacement: np.ndarray, h: float = 1e-30):
    x = sorted_coordinates(complex_.mesh).astype(complex)
    dx = displacement[complex_.topology.sorted_tets]
    loc = element_matrices(x + 1j * h * dx, faces=False)
    return {k: loc[k].imag / h for k in ("vol", "S", "C")}


def _pencil_derivative_parts(complex_: CochainComplex, a: np.ndarray, displacement: np.ndarray):
    """(a^H dS a, a^H dC_sym a, a^H C_sym a) for potential columns a."""
    from ..spectrum.constraints import assemble_curl

    d = _complex_step_elements(complex_, np.asarray(displacement, float))
    _, c_sym, _ = assemble_curl(complex_)
    n = a.conj().T @ (c_sym @ a)
    loc = a[complex_.topology.tet_edges]                    # (T, 6, m)
    dc = (d["C"] + np.transpose(d["C"], (0, 2, 1))) / 2
    ds = np.einsum("tim,tij,tjn->mn", loc.conj(), d["S"], loc)
    dcs = np.einsum("tim,tij,tjn->mn", loc.conj(), dc, loc)
    return ds, dcs, (n + n.conj().T) / 2


def discrete_branch_slopes(complex_: CochainComplex, potentials: np.ndarray, eigenvalues,
                           displacement: np.ndarray) -> np.ndarray:
    """Exact derivative of each discrete eigenvalue along a displacement (one per column)."""
    a = np.asarray(potentials).reshape(len(potentials), -1)
    ds, dcs, n = _pencil_derivative_parts(complex_, a, displacement)
    lam = np.asarray(eigenvalues, float)
    return (np.diag(ds).real - lam * np.diag(dcs).real) / np.diag(n).real


def discrete_derivative_matrix(complex_: CochainComplex, potentials: np.ndarray, eigenvalue: float,
                               displacement: np.ndarray) -> np.ndarray:
    """Exact derivative of the discrete pencil S a = lambda C a along a vertex displacement.

    Returns a_i^H (dS - lambda dC_sym) a_j after C_sym-orthonormalizing the
    potentials; its eigenvalues are the derivatives of the discrete
    eigenvalue branches. Element derivatives use a complex step.
    """
    a = np.asarray(potentials).reshape(len(potentials), -1)
    ds, dcs, n = _pencil_derivative_parts(complex_, a, displacement)
    m = ds - eigenvalue * dcs
    w, u = np.linalg.eigh(n)
    t = u @ np.diag(w ** -0.5) @ u.conj().T
    out = t.conj().T @ m @ t
    out = (out + out.conj().T) / 2
    return out.real if not np.iscomplexobj(a) else out


def volume_derivative(complex_: CochainComplex, displacement: np.ndarray) -> float:
    """Exact derivative of the polyhedral volume along a vertex displacement."""
    return float(_complex_step_elements(complex_, np.asarray(displacement, float))["vol"].sum())
