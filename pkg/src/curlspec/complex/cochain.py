"""Incidence matrices and Whitney-form Galerkin matrices on a tetrahedral mesh."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from ..errors import DegenerateTet
from ..mesh.tetmesh import LOCAL_EDGES, LOCAL_FACES, TetMesh, Topology


def barycentric_gradients(x: np.ndarray):
    """Volumes and barycentric gradients for tets with vertex coordinates x (T, 4, 3).

    Works for complex coordinates too (used for complex-step derivatives).
    Returns (volume (T,), grads (T, 4, 3)); the volume is the absolute value
    for the given vertex order.
    """
    jac = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0], x[:, 3] - x[:, 0]], axis=1)
    det = np.linalg.det(jac)
    inv = np.linalg.inv(jac)
    g = np.empty(x.shape, dtype=inv.dtype)
    g[:, 1:] = np.transpose(inv, (0, 2, 1))
    g[:, 0] = -g[:, 1:].sum(axis=1)
    sign = np.sign(det.real)
    return det * sign / 6.0, g


def element_matrices(x: np.ndarray, faces: bool = True) -> dict:
    """Local Whitney matrices for tets with sorted-vertex coordinates x (T, 4, 3).

    Keys: ``vol``, ``grads``, ``M0`` (T,4,4), ``M1`` (T,6,6), ``M2`` (T,4,4),
    ``C`` (T,6,6) with C[i, j] = integral of curl W_j . W_i, and ``S`` (T,6,6)
    the curl-curl matrix. ``faces=False`` skips M2.
    """
    vol, g = barycentric_gradients(x)
    a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    lam_mass = vol[:, None, None] * (1.0 + np.eye(4))[None] / 20.0
    dots = np.einsum("tic,tjc->tij", g, g)
    m1 = (lam_mass[:, a[:, None], a[None, :]] * dots[:, b[:, None], b[None, :]]
          - lam_mass[:, a[:, None], b[None, :]] * dots[:, b[:, None], a[None, :]]
          - lam_mass[:, b[:, None], a[None, :]] * dots[:, a[:, None], b[None, :]]
          + lam_mass[:, b[:, None], b[None, :]] * dots[:, a[:, None], a[None, :]])
    curl = 2.0 * np.cross(g[:, a], g[:, b])                   # (T, 6, 3), constant per tet
    mean_w = (vol[:, None, None] / 4.0) * (g[:, b] - g[:, a])  # integral of W over the tet
    c = np.einsum("tjc,tic->tij", curl, mean_w)
    s = vol[:, None, None] * np.einsum("tic,tjc->tij", curl, curl)
    out = {"vol": vol, "grads": g, "M0": lam_mass, "M1": m1, "C": c, "S": s}
    if not faces:
        return out

    # Whitney 2-forms: W_f = 2 * sum over cyclic (p,q,r) of lambda_p grad q x grad r
    cross = {}
    for p in range(4):
        for q in range(4):
            if p != q:
                cross[p, q] = np.cross(g[:, p], g[:, q])
    m2 = np.zeros((len(x), 4, 4), dtype=m1.dtype)
    for fi, f in enumerate(LOCAL_FACES):
        cyc_f = [(f[0], f[1], f[2]), (f[1], f[2], f[0]), (f[2], f[0], f[1])]
        for fj, h in enumerate(LOCAL_FACES):
            if fj < fi:
                continue
            cyc_h = [(h[0], h[1], h[2]), (h[1], h[2], h[0]), (h[2], h[0], h[1])]
            acc = 0.0
            for p, q, r in cyc_f:
                for p2, q2, r2 in cyc_h:
                    acc = acc + lam_mass[:, p, p2] * np.einsum("tc,tc->t", cross[q, r], cross[q2, r2])
            m2[:, fi, fj] = 4.0 * acc
            m2[:, fj, fi] = 4.0 * acc
    out["M2"] = m2
    return out


def _scatter(local: np.ndarray, ids: np.ndarray, n: int, signs: np.ndarray | None = None) -> sp.csr_matrix:
    k = ids.shape[1]
    vals = local if signs is None else local * signs[:, :, None] * signs[:, None, :]
    rows = np.repeat(ids, k, axis=1).ravel()
    cols = np.tile(ids, (1, k)).ravel()
    return sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class CochainComplex:
    """Discrete de Rham complex of a TetMesh.

    ``C`` is the helicity pairing C[i, j] = integral of curl W_j . W_i; its
    skew part is supported on boundary edges. ``S = d1^T M2 d1`` is the
    curl-curl stiffness.
    """

    mesh: TetMesh
    d0: sp.csr_matrix
    d1: sp.csr_matrix
    d2: sp.csr_matrix
    M0: sp.csr_matrix
    M1: sp.csr_matrix
    M2: sp.csr_matrix
    M3: sp.csr_matrix
    C: sp.csr_matrix
    S: sp.csr_matrix
    volumes: np.ndarray
    grads: np.ndarray

    @property
    def topology(self) -> Topology:
        return self.mesh.topology

    @property
    def boundary_vertices(self) -> np.ndarray:
        return self.topology.boundary_vertices

    @property
    def boundary_edges(self) -> np.ndarray:
        return self.topology.boundary_edges

    @property
    def boundary_faces(self) -> np.ndarray:
        return self.topology.boundary_faces

    @property
    def n_edges(self) -> int:
        return self.topology.n_edges

    def export_matrix_market(self, directory, names=("d0", "d1", "d2", "M0", "M1", "M2", "C", "S")) -> list[Path]:
        """Write the selected matrices as Matrix Market coordinate files."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in names:
            p = out / f"{name}.mtx"
            scipy.io.mmwrite(str(p), getattr(self, name).tocoo(), comment=f"{name} of {self.mesh.domain_name}")
            paths.append(p)
        return paths


def sorted_coordinates(mesh: TetMesh, vertices: np.ndarray | None = None) -> np.ndarray:
    v = mesh.vertices if vertices is None else vertices
    return v[mesh.topology.sorted_tets]


def assemble_edge_matrices(topology: Topology, x: np.ndarray) -> dict:
    """Assemble M1, C and S for sorted-vertex coordinates x (T, 4, 3)."""
    loc = element_matrices(x, faces=False)
    ne = topology.n_edges
    return {k: _scatter(loc[k], topology.tet_edges, ne) for k in ("M1", "C", "S")}


def build_complex(mesh: TetMesh) -> CochainComplex:
    """Incidence matrices plus Whitney mass, helicity and curl-curl matrices."""
    topo = mesh.topology
    x = sorted_coordinates(mesh)
    loc = element_matrices(x)
    vol = loc["vol"]
    bad = np.nonzero(mesh.tet_volumes <= 0)[0]
    if len(bad):
        raise DegenerateTet(int(bad[0]), float(mesh.tet_volumes[bad[0]]))
    ne, nf, nv = topo.n_edges, topo.n_faces, topo.n_vertices
    m0 = _scatter(loc["M0"], topo.sorted_tets, nv)
    m1 = _scatter(loc["M1"], topo.tet_edges, ne)
    m2 = _scatter(loc["M2"], topo.tet_faces, nf)
    m3 = sp.diags(1.0 / vol).tocsr()
    c = _scatter(loc["C"], topo.tet_edges, ne)
    s = _scatter(loc["S"], topo.tet_edges, ne)
    return CochainComplex(mesh, topo.d0, topo.d1, topo.d2, m0, m1, m2, m3, c, s, vol, loc["grads"])


def interpolate_edge_field(mesh: TetMesh, field, order: int = 3) -> np.ndarray:
    """Edge cochain of a vector field: line integrals along every oriented edge.

    ``field`` maps an (n, 3) array of points to (n, 3) vectors. Integrals use
    Gauss-Legendre quadrature with ``order`` points.
    """
    e = mesh.topology.edges
    a, b = mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]
    t, w = np.polynomial.legendre.leggauss(order)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    out = np.zeros(len(e))
    for ti, wi in zip(t, w):
        out += wi * np.einsum("ij,ij->i", field(a + ti * (b - a)), b - a)
    return out


def interpolate_face_field(mesh: TetMesh, field) -> np.ndarray:
    """Face cochain of a vector field: fluxes through every oriented face (centroid rule)."""
    f = mesh.topology.faces
    p = mesh.vertices[f]
    n = 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return np.einsum("ij,ij->i", field(p.mean(axis=1)), n)


def whitney_field(complex_: CochainComplex, v: np.ndarray, tet_ids: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Evaluate the Whitney 1-form interpolant of edge cochain(s) v at points.

    ``bary`` (n, 4) are barycentric coordinates in the sorted vertex order of
    tets ``tet_ids`` (n,). Returns (n, 3) or (n, 3, k) for v of shape (E, k).
    """
    topo = complex_.topology
    g = complex_.grads[tet_ids]                               # (n, 4, 3)
    a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
    w = bary[:, a, None] * g[:, b] - bary[:, b, None] * g[:, a]  # (n, 6, 3)
    coeff = np.asarray(v)[topo.tet_edges[tet_ids]]            # (n, 6) or (n, 6, k)
    if coeff.ndim == 2:
        return np.einsum("nec,ne->nc", w, coeff)
    return np.einsum("nec,nek->nck", w, coeff)


def tet_centroid_field(complex_: CochainComplex, v: np.ndarray) -> np.ndarray:
    """Whitney interpolant of v at every tet centroid, (T, 3)."""
    t = np.arange(complex_.topology.n_tets)
    return whitney_field(complex_, v, t, np.full((len(t), 4), 0.25))


def vertex_field(complex_: CochainComplex, v: np.ndarray) -> np.ndarray:
    """Volume-weighted average of tet centroid values at each vertex, (V, 3)."""
    cent = tet_centroid_field(complex_, v)
    vol = complex_.volumes
    topo = complex_.topology
    acc = np.zeros((topo.n_vertices, 3), dtype=cent.dtype)
    wsum = np.zeros(topo.n_vertices)
    for k in range(4):
        np.add.at(acc, topo.sorted_tets[:, k], cent * vol[:, None])
        np.add.at(wsum, topo.sorted_tets[:, k], vol)
    return acc / wsum[:, None]
