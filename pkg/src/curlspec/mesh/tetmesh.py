"""Tetrahedral mesh container and its combinatorial topology."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from ..errors import DegenerateTet, MeshError, NonManifoldBoundary

# Local edges and faces of a tetrahedron whose vertices are sorted by global id.
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
LOCAL_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])  # face i is opposite vertex i


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def signed_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    x = vertices[tets]
    e1, e2, e3 = x[:, 1] - x[:, 0], x[:, 2] - x[:, 0], x[:, 3] - x[:, 0]
    return np.einsum("ij,ij->i", np.cross(e1, e2), e3) / 6.0


def orient_positively(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Swap two vertices of every negatively oriented tetrahedron."""
    tets = np.array(tets, dtype=np.int64, copy=True)
    neg = signed_volumes(vertices, tets) < 0
    tets[neg] = tets[neg][:, [0, 2, 1, 3]]
    return tets


def _permutation_parity(tets: np.ndarray) -> np.ndarray:
    """+1 for even, -1 for odd permutation sorting each row."""
    order = np.argsort(tets, axis=1, kind="stable")
    parity = np.ones(len(tets))
    # count inversions of the 4-element permutation
    for i in range(4):
        for j in range(i + 1, 4):
            parity *= np.where(order[:, i] > order[:, j], -1.0, 1.0)
    return parity


class Topology:
    """Vertex/edge/face/tet incidence for a fixed connectivity.

    Edges and faces are stored with vertices in increasing global order, which
    fixes their orientation. Tetrahedra carry the orientation of the input
    connectivity (positive signed volume).
    """

    def __init__(self, n_vertices: int, tets: np.ndarray):
        self.n_vertices = int(n_vertices)
        self.tets = tets
        self.sorted_tets = np.sort(tets, axis=1)
        self.parity = _permutation_parity(tets)
        st = self.sorted_tets
        nt = len(st)

        e = np.concatenate([st[:, list(p)] for p in LOCAL_EDGES])
        self.edges, einv = np.unique(e, axis=0, return_inverse=True)
        self.tet_edges = einv.reshape(6, nt).T.copy()

        f = np.concatenate([st[:, list(p)] for p in LOCAL_FACES])
        self.faces, finv, fcount = np.unique(f, axis=0, return_inverse=True, return_counts=True)
        self.tet_faces = finv.reshape(4, nt).T.copy()
        if np.any(fcount > 2):
            raise NonManifoldBoundary(f"{int(np.sum(fcount > 2))} faces shared by more than two tetrahedra")
        self.face_count = fcount

        self._edge_keys = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        self._face_keys = (self.faces[:, 0] * self.n_vertices + self.faces[:, 1]) * self.n_vertices + self.faces[:, 2]

        # boundary faces with outward (induced) orientation
        bmask = fcount == 1
        self.boundary_faces = np.nonzero(bmask)[0]
        occ_t, occ_i = np.nonzero(bmask[self.tet_faces])
        order = np.argsort(self.tet_faces[occ_t, occ_i])
        occ_t, occ_i = occ_t[order], occ_i[order]
        self.boundary_face_tet = occ_t
        self.boundary_face_local = occ_i
        induced = self.parity[occ_t] * np.where(occ_i % 2 == 0, 1.0, -1.0)
        bf = self.faces[self.boundary_faces]
        self.boundary_face_sign = induced  # orientation of sorted face relative to outward
        self.boundary_triangles = np.where(induced[:, None] > 0, bf, bf[:, [0, 2, 1]])

        bfe = self.face_edges[self.boundary_faces]
        self.boundary_edges = np.unique(bfe)
        ecount = np.bincount(bfe.ravel(), minlength=len(self.edges))
        if np.any(ecount[self.boundary_edges] != 2):
            raise NonManifoldBoundary("boundary surface has edges not shared by exactly two boundary faces")
        self.boundary_vertices = np.unique(bf)
        self.is_boundary_edge = np.zeros(len(self.edges), bool)
        self.is_boundary_edge[self.boundary_edges] = True
        self.is_boundary_vertex = np.zeros(self.n_vertices, bool)
        self.is_boundary_vertex[self.boundary_vertices] = True

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def edge_ids(self, a, b):
        """Edge indices and orientation signs (+1 if a<b) for vertex pairs."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * self.n_vertices + hi
        idx = np.searchsorted(self._edge_keys, keys)
        idx = np.clip(idx, 0, len(self._edge_keys) - 1)
        if np.any(self._edge_keys[idx] != keys):
            raise MeshError("vertex pair is not an edge of the mesh")
        return idx, np.where(a < b, 1, -1)

    def face_ids(self, tri):
        """Face indices and orientation signs for oriented vertex triples."""
        tri = np.asarray(tri, dtype=np.int64).reshape(-1, 3)
        srt = np.sort(tri, axis=1)
        keys = (srt[:, 0] * self.n_vertices + srt[:, 1]) * self.n_vertices + srt[:, 2]
        idx = np.searchsorted(self._face_keys, keys)
        idx = np.clip(idx, 0, len(self._face_keys) - 1)
        if np.any(self._face_keys[idx] != keys):
            raise MeshError("vertex triple is not a face of the mesh")
        return idx, _permutation_parity3(tri)

    @cached_property
    def face_edges(self) -> np.ndarray:
        """Edge ids of each face in the order (ab, bc, ac)."""
        f = self.faces
        ab, _ = self.edge_ids(f[:, 0], f[:, 1])
        bc, _ = self.edge_ids(f[:, 1], f[:, 2])
        ac, _ = self.edge_ids(f[:, 0], f[:, 2])
        return np.stack([ab, bc, ac], axis=1)

    @cached_property
    def d0(self) -> sp.csr_matrix:
        ne = self.n_edges
        rows = np.r_[np.arange(ne), np.arange(ne)]
        cols = np.r_[self.edges[:, 0], self.edges[:, 1]]
        vals = np.r_[-np.ones(ne), np.ones(ne)]
        return sp.csr_matrix((vals, (rows, cols)), shape=(ne, self.n_vertices))

    @cached_property
    def d1(self) -> sp.csr_matrix:
        nf = self.n_faces
        rows = np.repeat(np.arange(nf), 3)
        vals = np.tile([1.0, 1.0, -1.0], nf)
        return sp.csr_matrix((vals, (rows, self.face_edges.ravel())), shape=(nf, self.n_edges))

    @cached_property
    def d2(self) -> sp.csr_matrix:
        nt = self.n_tets
        rows = np.repeat(np.arange(nt), 4)
        vals = (self.parity[:, None] * np.array([1.0, -1.0, 1.0, -1.0])[None, :]).ravel()
        return sp.csr_matrix((vals, (rows, self.tet_faces.ravel())), shape=(nt, self.n_faces))

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces - self.n_tets

    def boundary_components(self) -> list[np.ndarray]:
        """Boundary-face index arrays (into boundary_faces), one per connected component."""
        from scipy.sparse.csgraph import connected_components

        tri = self.boundary_triangles
        nb = len(tri)
        rows = np.repeat(np.arange(nb), 3)
        g = sp.csr_matrix((np.ones(3 * nb), (rows, tri.ravel())), shape=(nb, self.n_vertices))
        adj = g @ g.T
        ncomp, labels = connected_components(adj, directed=False)
        return [np.nonzero(labels == c)[0] for c in range(ncomp)]

    def boundary_genus(self) -> int:
        """Total genus of the boundary surface from its Euler characteristic."""
        genus = 0
        fe = self.face_edges
        for comp in self.boundary_components():
            faces = self.boundary_faces[comp]
            nv = len(np.unique(self.faces[faces]))
            ne = len(np.unique(fe[faces]))
            chi = nv - ne + len(faces)
            genus += (2 - chi) // 2
        return genus


def _permutation_parity3(tri: np.ndarray) -> np.ndarray:
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    inv = (a > b).astype(int) + (a > c).astype(int) + (b > c).astype(int)
    return np.where(inv % 2 == 0, 1, -1)


@dataclass(frozen=True, eq=False)
class TetMesh:
    """Immutable conforming tetrahedral mesh of a compact domain.

    ``surface_tags`` map names to oriented boundary or interior triangles
    (k, 3); ``curve_tags`` map names to oriented edge chains (k, 2) given as
    vertex pairs.
    """

    vertices: np.ndarray
    tets: np.ndarray
    surface_tags: Mapping[str, np.ndarray] = field(default_factory=dict)
    curve_tags: Mapping[str, np.ndarray] = field(default_factory=dict)
    domain_name: str = "domain"
    _topology: Topology | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = _frozen(self.vertices, float)
        t = _frozen(self.tets, np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must have shape (n, 3)")
        if t.ndim != 2 or t.shape[1] != 4:
            raise MeshError("tets must have shape (m, 4)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("tet references a vertex index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "tets", t)
        object.__setattr__(self, "surface_tags", {k: _frozen(a, np.int64).reshape(-1, 3) for k, a in self.surface_tags.items()})
        object.__setattr__(self, "curve_tags", {k: _frozen(a, np.int64).reshape(-1, 2) for k, a in self.curve_tags.items()})
        vol = signed_volumes(v, t)
        bad = np.nonzero(vol <= 0)[0]
        if len(bad):
            raise DegenerateTet(int(bad[0]), float(vol[bad[0]]))

    @cached_property
    def topology(self) -> Topology:
        if self._topology is not None:
            return self._topology
        return Topology(len(self.vertices), self.tets)

    def with_vertices(self, vertices: np.ndarray, domain_name: str | None = None) -> "TetMesh":
        """Same connectivity and tags, new vertex positions (topology is shared)."""
        return TetMesh(vertices, self.tets, self.surface_tags, self.curve_tags,
                       domain_name or self.domain_name, _topology=self.topology)

    def without_tags(self) -> "TetMesh":
        return TetMesh(self.vertices, self.tets, {}, {}, self.domain_name, _topology=self.topology)

    # geometry -----------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    @cached_property
    def tet_volumes(self) -> np.ndarray:
        return signed_volumes(self.vertices, self.tets)

    def volume(self) -> float:
        return float(self.tet_volumes.sum())

    @cached_property
    def boundary_face_normals(self) -> np.ndarray:
        """Area-weighted outward normals (length = 2 * area)."""
        tri = self.vertices[self.topology.boundary_triangles]
        return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])

    @cached_property
    def boundary_face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.boundary_face_normals, axis=1)

    def boundary_area(self) -> float:
        return float(self.boundary_face_areas.sum())

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Unit outward normals at boundary vertices (rows follow topology.boundary_vertices)."""
        topo = self.topology
        acc = np.zeros((self.n_vertices, 3))
        for k in range(3):
            np.add.at(acc, topo.boundary_triangles[:, k], self.boundary_face_normals)
        nb = acc[topo.boundary_vertices]
        return nb / np.linalg.norm(nb, axis=1, keepdims=True)

    def diameter(self) -> float:
        bv = self.vertices[self.topology.boundary_vertices]
        lo, hi = bv.min(axis=0), bv.max(axis=0)
        # bounding-box diagonal is a cheap upper bound; refine with a hull-free pairwise pass on a sample
        if len(bv) <= 3000:
            from scipy.spatial.distance import pdist
            return float(pdist(bv).max())
        return float(np.linalg.norm(hi - lo))

    def edge_lengths(self) -> np.ndarray:
        e = self.topology.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    def quality(self) -> dict:
        """Minimum dihedral angle (degrees), maximum normalized aspect ratio and h_max.

        The aspect ratio is longest edge over inradius, scaled so a regular
        tetrahedron scores 1.
        """
        x = self.vertices[self.tets]
        outward = np.stack([_outward(x, i) for i in range(4)], axis=1)
        areas = np.stack([0.5 * np.linalg.norm(np.cross(x[:, b] - x[:, a], x[:, c] - x[:, a]), axis=1)
                          for (a, b, c) in LOCAL_FACES], axis=1)
        min_angle = np.inf
        for i in range(4):
            for j in range(i + 1, 4):
                cosang = np.einsum("ij,ij->i", outward[:, i], outward[:, j])
                ang = np.pi - np.arccos(np.clip(cosang, -1.0, 1.0))
                min_angle = min(min_angle, float(np.degrees(ang).min()))
        inradius = 3 * self.tet_volumes / areas.sum(axis=1)
        le = np.linalg.norm(x[:, LOCAL_EDGES[:, 1]] - x[:, LOCAL_EDGES[:, 0]], axis=2)
        aspect = le.max(axis=1) / (2 * np.sqrt(6) * inradius)
        return {"min_dihedral_deg": min_angle, "max_aspect_ratio": float(aspect.max()), "h_max": float(le.max())}


def _outward(x, i):
    """Outward unit normal of the face opposite local vertex i."""
    a, b, c = LOCAL_FACES[i]
    n = np.cross(x[:, b] - x[:, a], x[:, c] - x[:, a])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    s = np.sign(np.einsum("ij,ij->i", n, x[:, a] - x[:, i]))
    return n * s[:, None]
