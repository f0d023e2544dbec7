"""Boundary cycles, cut surfaces, intersection numbers and period functionals.

The boundary cohomology is built from a tree-cotree decomposition of the
boundary surface: a spanning tree of the boundary graph (contained in the
volume spanning tree) and a spanning tree of the dual graph across the
remaining edges. The 2g leftover edges give generator loops, and closed
boundary cochains vanishing on the tree and dual to those loops. The
intersection form is read off the wedge pairing of these cocycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.sparse.csgraph import breadth_first_order, minimum_spanning_tree

from ..errors import HomologyRankMismatch, MeshError
from ..mesh.tetmesh import TetMesh, Topology
from . import snf


@dataclass(frozen=True)
class EdgeChain:
    """Integer combination of oriented edges."""

    edges: np.ndarray
    coefficients: np.ndarray
    name: str = ""

    def as_vector(self, n_edges: int) -> np.ndarray:
        out = np.zeros(n_edges)
        np.add.at(out, self.edges, self.coefficients)
        return out


@dataclass(frozen=True)
class FaceChain:
    """Integer combination of oriented faces (sorted-vertex orientation)."""

    faces: np.ndarray
    coefficients: np.ndarray
    name: str = ""

    def as_vector(self, n_faces: int) -> np.ndarray:
        out = np.zeros(n_faces)
        np.add.at(out, self.faces, self.coefficients)
        return out


def chain_from_vertex_pairs(topology: Topology, pairs, name: str = "") -> EdgeChain:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    ids, signs = topology.edge_ids(pairs[:, 0], pairs[:, 1])
    vec = np.zeros(topology.n_edges)
    np.add.at(vec, ids, signs)
    nz = np.nonzero(vec)[0]
    return EdgeChain(nz, vec[nz], name)


def chain_from_triangles(topology: Topology, tris, name: str = "") -> FaceChain:
    ids, signs = topology.face_ids(tris)
    vec = np.zeros(topology.n_faces)
    np.add.at(vec, ids, signs)
    nz = np.nonzero(vec)[0]
    return FaceChain(nz, vec[nz], name)


# --------------------------------------------------------------------------
# spanning trees


def spanning_tree(topology: Topology) -> np.ndarray:
    """Boolean mask of a spanning tree of the edge graph.

    Boundary edges get weight 1 and interior edges weight 2, so the tree
    restricted to each boundary component is a spanning tree of it.
    """
    cached = getattr(topology, "_spanning_tree", None)
    if cached is not None:
        return cached
    e = topology.edges
    w = np.where(topology.is_boundary_edge, 1.0, 2.0)
    g = sp.csr_matrix((w, (e[:, 0], e[:, 1])), shape=(topology.n_vertices,) * 2)
    t = minimum_spanning_tree(g).tocoo()
    ids, _ = topology.edge_ids(t.row, t.col)
    mask = np.zeros(topology.n_edges, bool)
    mask[ids] = True
    mask.setflags(write=False)
    topology._spanning_tree = mask
    return mask


# --------------------------------------------------------------------------
# boundary cohomology


@dataclass(frozen=True, eq=False)
class BoundaryCohomology:
    """Tree-cotree generators of the boundary surface.

    ``cocycles`` (E x 2g) are closed boundary cochains, zero on the tree,
    with cocycles[:, i] paired against ``loops[j]`` equal to delta_ij.
    ``wedge`` is the matrix of boundary wedge integrals of the cocycles.
    """

    generator_edges: np.ndarray
    cocycles: np.ndarray
    loops: list
    wedge: np.ndarray
    genus: int

    def coordinates(self, chain: EdgeChain) -> np.ndarray:
        """Homology coordinates of a boundary cycle in the loop basis."""
        return chain.coefficients @ self.cocycles[chain.edges]

    def loop_intersections(self) -> np.ndarray:
        """Intersection numbers of the generator loops."""
        if self.genus == 0:
            return np.zeros((0, 0))
        return np.linalg.inv(self.wedge).T


def _boundary_cohomology(topology: Topology, vertices: np.ndarray) -> BoundaryCohomology:
    tree = spanning_tree(topology)
    be = topology.boundary_edges
    btree = be[tree[be]]
    nbv = len(topology.boundary_vertices)
    comps = topology.boundary_components()
    if len(btree) != nbv - len(comps):
        raise MeshError("spanning tree does not restrict to a spanning tree of the boundary")

    # dual graph on boundary faces across boundary cotree edges
    bfe = topology.face_edges[topology.boundary_faces]
    nb = len(bfe)
    owner = {}
    pairs = []
    pair_edge = []
    for fi in range(nb):
        for e in bfe[fi]:
            if tree[e]:
                continue
            if e in owner:
                pairs.append((owner.pop(e), fi))
                pair_edge.append(e)
            else:
                owner[e] = fi
    pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    pair_edge = np.array(pair_edge, dtype=np.int64)
    wts = np.arange(1, len(pairs) + 1, dtype=float)  # deterministic, distinct weights
    dual = sp.csr_matrix((wts, (pairs[:, 0], pairs[:, 1])), shape=(nb, nb))
    dt = minimum_spanning_tree(dual).tocoo()
    lookup = {(min(a, b), max(a, b)): k for k, (a, b) in enumerate(pairs)}
    dual_tree_edges = np.array([pair_edge[lookup[(min(a, b), max(a, b))]] for a, b in zip(dt.row, dt.col)], dtype=np.int64)
    in_dual = np.zeros(topology.n_edges, bool)
    in_dual[dual_tree_edges] = True
    generators = np.array([e for e in pair_edge if not in_dual[e]], dtype=np.int64)
    generators.sort()
    genus2 = len(generators)
    if genus2 % 2:
        raise MeshError("odd number of boundary generators: boundary is not orientable")
    genus = genus2 // 2

    # closed cochains: zero on tree, unit on one generator, solve for dual-tree edges
    ne = topology.n_edges
    cocycles = np.zeros((ne, genus2))
    if genus2:
        d1b = topology.d1[topology.boundary_faces]
        a = d1b[:, dual_tree_edges].tocsc()
        roots = np.array([c[0] for c in comps])
        keep = np.ones(nb, bool)
        keep[roots] = False
        a_sq = a[keep].tocsc()
        rhs = -(d1b[:, generators].toarray())[keep]
        x = sla.spsolve(a_sq, rhs)
        x = np.asarray(x).reshape(len(dual_tree_edges), genus2)
        cocycles[dual_tree_edges] = np.rint(x)
        cocycles[generators, np.arange(genus2)] = 1.0
        if np.abs(d1b @ cocycles).max() > 1e-9:
            raise MeshError("failed to build closed boundary cocycles")

    loops = _generator_loops(topology, btree, generators)
    wedge = boundary_wedge_matrix(topology, cocycles, vertices) if genus2 else np.zeros((0, 0))
    return BoundaryCohomology(generators, cocycles, loops, wedge, genus)


def _generator_loops(topology: Topology, btree: np.ndarray, generators: np.ndarray) -> list:
    nv = topology.n_vertices
    e = topology.edges[btree]
    g = sp.csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nv, nv))
    g = g + g.T
    parent = -np.ones(nv, np.int64)
    depth = np.zeros(nv, np.int64)
    seen = np.zeros(nv, bool)
    for v0 in topology.boundary_vertices:
        if seen[v0]:
            continue
        order, pred = breadth_first_order(g, v0, directed=False, return_predecessors=True)
        seen[order] = True
        for v in order[1:]:
            parent[v] = pred[v]
            depth[v] = depth[pred[v]] + 1
    loops = []
    for gen in generators:
        a, b = topology.edges[gen]
        # loop: a -> b along the generator, then b -> a inside the tree
        path_b, path_a = [b], [a]
        x, y = b, a
        while depth[x] > depth[y]:
            x = parent[x]
            path_b.append(x)
        while depth[y] > depth[x]:
            y = parent[y]
            path_a.append(y)
        while x != y:
            x, y = parent[x], parent[y]
            path_b.append(x)
            path_a.append(y)
        verts = [a] + path_b + path_a[-2::-1]
        pairs = np.stack([verts[:-1], verts[1:]], axis=1)
        loops.append(chain_from_vertex_pairs(topology, pairs, name=f"loop_{gen}"))
    return loops


def boundary_wedge_matrix(topology: Topology, cochains: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Wedge integrals of Whitney interpolants of boundary 1-cochains.

    Entry (i, j) is the integral over the outward-oriented boundary of
    W(a_i) ^ W(a_j). For closed cochains the value depends only on the
    cohomology classes, not on the embedding.
    """
    tri = topology.boundary_triangles
    x = vertices[tri]
    n = np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0])
    area2 = np.linalg.norm(n, axis=1)
    nhat = n / area2[:, None]
    # barycentric gradients in the plane: grad l_i = nhat x e_i / (2A), e_i opposite edge (ccw)
    opp = [(1, 2), (2, 0), (0, 1)]
    grads = np.stack([np.cross(nhat, x[:, j] - x[:, i]) / area2[:, None] for (i, j) in opp], axis=1)
    local = [(0, 1), (1, 2), (0, 2)]
    ids, signs = [], []
    for (i, j) in local:
        eid, s = topology.edge_ids(tri[:, i], tri[:, j])
        ids.append(eid)
        signs.append(s)
    ids = np.stack(ids, axis=1)
    signs = np.stack(signs, axis=1).astype(float)
    area = 0.5 * area2
    mass = area[:, None, None] * (1.0 + np.eye(3))[None] / 12.0
    xw = np.zeros((len(tri), 3, 3))
    for i in range(3):
        for j in range(3):
            xw[:, i, j] = np.einsum("tc,tc->t", np.cross(grads[:, i], grads[:, j]), nhat)
    k = np.zeros((len(tri), 3, 3))
    for p, (i, j) in enumerate(local):
        for q, (a, b) in enumerate(local):
            k[:, p, q] = (mass[:, i, a] * xw[:, j, b] - mass[:, i, b] * xw[:, j, a]
                          - mass[:, j, a] * xw[:, i, b] + mass[:, j, b] * xw[:, i, a])
    vals = cochains[ids] * signs[:, :, None]  # (T, 3 local edges, ncochains)
    return np.einsum("tpa,tpq,tqb->ab", vals, k, vals)


# --------------------------------------------------------------------------
# homology basis


@dataclass(frozen=True, eq=False)
class HomologyBasis:
    """Symplectic-style basis of boundary 1-cycles with matching cut surfaces.

    ``boundary_cocycles`` (E x 2l) are closed boundary cochains dual to the
    cycles (alpha_1..alpha_l, beta_1..beta_l). ``dual_cocycles`` (E x l) are
    closed volume cochains whose periods along the beta cycles reproduce the
    cut-surface intersection numbers; pairing them with an edge field through
    M1 gives the weak flux through each cut surface.
    """

    genus: int
    genus_per_component: tuple
    alpha_cycles: list
    beta_cycles: list
    cut_surfaces: list | None
    intersection_matrix: np.ndarray
    boundary_cocycles: np.ndarray
    dual_cocycles: np.ndarray
    source: str = "tags"
    notes: dict = field(default_factory=dict)

    @property
    def cycles(self) -> list:
        return list(self.alpha_cycles) + list(self.beta_cycles)

    @property
    def ell(self) -> int:
        return self.genus


def _genus_per_component(topology: Topology) -> tuple:
    out = []
    fe = topology.face_edges
    for comp in topology.boundary_components():
        faces = topology.boundary_faces[comp]
        nv = len(np.unique(topology.faces[faces]))
        ne = len(np.unique(fe[faces]))
        out.append((2 - (nv - ne + len(faces))) // 2)
    return tuple(out)


def cycle_intersection_matrix(mesh: TetMesh, cycles) -> np.ndarray:
    """Integer intersection numbers of boundary cycles on the outward-oriented boundary."""
    topo = mesh.topology
    coh = boundary_cohomology(mesh)
    chains = [c if isinstance(c, EdgeChain) else chain_from_vertex_pairs(topo, c) for c in cycles]
    if coh.genus == 0:
        return np.zeros((len(chains), len(chains)), dtype=np.int64)
    x = np.stack([coh.coordinates(c) for c in chains])
    q = x @ coh.loop_intersections() @ x.T
    qi = np.rint(q)
    if np.abs(q - qi).max() > 1e-6:
        raise MeshError("intersection numbers are not integral; boundary is not a closed surface")
    return qi.astype(np.int64)


def boundary_cohomology(mesh: TetMesh) -> BoundaryCohomology:
    """Tree-cotree generators of the boundary (cached on the mesh topology)."""
    topo = mesh.topology
    cached = getattr(topo, "_boundary_cohomology", None)
    if cached is None:
        cached = _boundary_cohomology(topo, mesh.vertices)
        topo._boundary_cohomology = cached
    return cached


def extend_closed_cochains(mesh: TetMesh, boundary_values: np.ndarray, tol: float = 1e-8):
    """Extend closed boundary cochains (vanishing on the spanning tree) to closed volume cochains.

    Returns (extensions (E x k), relative residuals (k,)). A residual above
    ``tol`` means the boundary class does not extend, i.e. it pairs
    nontrivially with a cycle that bounds inside the domain.
    """
    topo = mesh.topology
    tree = spanning_tree(topo)
    b = np.atleast_2d(np.asarray(boundary_values, dtype=float).T).T
    free = np.nonzero(~tree & ~topo.is_boundary_edge)[0]
    fixed = topo.is_boundary_edge
    a = topo.d1[:, free].tocsc()
    rhs = -(topo.d1[:, fixed] @ b[fixed])
    ata = (a.T @ a).tocsc()
    lu = sla.splu(ata, permc_spec="MMD_AT_PLUS_A")
    x = lu.solve(np.asarray(a.T @ rhs))
    res = a @ x - rhs
    out = np.zeros((topo.n_edges, b.shape[1]))
    out[fixed] = b[fixed]
    out[free] = x
    scale = np.maximum(np.linalg.norm(rhs, axis=0), 1e-300)
    return out, np.linalg.norm(res, axis=0) / scale


def homology_basis(mesh: TetMesh, use_tags: bool = True) -> HomologyBasis:
    """Boundary cycle basis, cut surfaces and intersection matrix.

    Tagged meshes (``alpha_j``/``beta_j`` curves, ``cut_j`` surfaces) use the
    tags; otherwise the basis is computed from the boundary tree-cotree
    generators, the bounding subspace is found by testing which boundary
    classes extend to closed volume cochains, and a symplectic completion is
    found with integer Smith-normal-form solves.
    """
    topo = mesh.topology
    per_comp = _genus_per_component(topo)
    genus = int(sum(per_comp))
    coh = boundary_cohomology(mesh)
    if coh.genus != genus:
        raise HomologyRankMismatch(genus, coh.genus, "tree-cotree generator count")
    tagged = use_tags and any(k.startswith("alpha_") for k in mesh.curve_tags)
    if genus == 0:
        if tagged:
            raise HomologyRankMismatch(0, len([k for k in mesh.curve_tags if k.startswith("alpha_")]), "tagged cycles on a genus-0 boundary")
        e = np.zeros((topo.n_edges, 0))
        return HomologyBasis(0, per_comp, [], [], [], np.zeros((0, 0), np.int64), e, e, "tags" if use_tags else "computed")
    if tagged:
        return _tagged_basis(mesh, coh, genus, per_comp)
    return _computed_basis(mesh, coh, genus, per_comp)


def _finish_basis(mesh, coh, alphas, betas, cuts, per_comp, source, notes=None) -> HomologyBasis:
    topo = mesh.topology
    genus = len(alphas)
    cycles = alphas + betas
    x = np.stack([coh.coordinates(c) for c in cycles])  # (2l, 2l) integer coordinates
    xi = np.rint(x)
    if np.abs(x - xi).max() > 1e-8 or abs(round(abs(np.linalg.det(xi)))) != 1:
        raise HomologyRankMismatch(2 * genus, int(np.linalg.matrix_rank(xi)), "cycles do not form a basis of the boundary homology")
    q = np.rint(xi @ coh.loop_intersections() @ xi.T).astype(np.int64)
    # cochains dual to the chosen cycles
    dual = coh.cocycles @ np.linalg.inv(xi)
    dual[np.abs(dual) < 1e-12] = 0.0
    # volume cocycles: boundary values with beta-periods equal to cut . beta intersection numbers
    target = dual[:, genus:] @ q[:genus, genus:].T
    ext, res = extend_closed_cochains(mesh, target)
    if np.any(res > 1e-8):
        raise HomologyRankMismatch(genus, int(np.sum(res <= 1e-8)), "alpha cycles do not bound in the domain")
    return HomologyBasis(genus, per_comp, alphas, betas, cuts, q, dual, ext, source, notes or {})


def _tagged_basis(mesh, coh, genus, per_comp) -> HomologyBasis:
    topo = mesh.topology
    names = sorted(k for k in mesh.curve_tags if k.startswith("alpha_"))
    if len(names) != genus:
        raise HomologyRankMismatch(genus, len(names), "number of tagged alpha cycles")
    alphas, betas, cuts = [], [], []
    for n in names:
        idx = n.split("_", 1)[1]
        alphas.append(chain_from_vertex_pairs(topo, mesh.curve_tags[n], n))
        if f"beta_{idx}" not in mesh.curve_tags:
            raise HomologyRankMismatch(2 * genus, 2 * len(alphas) - 1, f"missing beta_{idx}")
        betas.append(chain_from_vertex_pairs(topo, mesh.curve_tags[f"beta_{idx}"], f"beta_{idx}"))
        if f"cut_{idx}" in mesh.surface_tags:
            cuts.append(chain_from_triangles(topo, mesh.surface_tags[f"cut_{idx}"], f"cut_{idx}"))
    for c in alphas + betas:
        if np.any(~topo.is_boundary_edge[c.edges]):
            raise MeshError(f"cycle {c.name} leaves the boundary")
        if np.abs(topo.d0[c.edges].T @ c.coefficients).max() > 0:
            raise MeshError(f"cycle {c.name} is not closed")
    if cuts and len(cuts) != genus:
        raise HomologyRankMismatch(genus, len(cuts), "number of tagged cut surfaces")
    for c in cuts:
        bnd = topo.d1[c.faces].T @ c.coefficients
        if np.any(~topo.is_boundary_edge[np.nonzero(bnd)[0]]):
            raise MeshError(f"cut surface {c.name} has boundary inside the domain")
    return _finish_basis(mesh, coh, alphas, betas, cuts or None, per_comp, "tags")


def _computed_basis(mesh, coh, genus, per_comp) -> HomologyBasis:
    topo = mesh.topology
    ext, res = extend_closed_cochains(mesh, coh.cocycles)
    # extendable combinations y: residual map R y = 0
    r_vecs = _residual_vectors(mesh, coh.cocycles)
    _, sv, vt = np.linalg.svd(r_vecs, full_matrices=True)
    null = vt[-genus:].T  # (2l, l) coefficients of extendable classes
    if len(sv) >= genus + 1 and sv[-genus - 1] < 1e-6 * max(sv[0], 1.0):
        raise HomologyRankMismatch(genus, 2 * genus - int(np.sum(sv > 1e-6 * sv[0])), "extendable boundary classes")
    # bounding cycles: x with y^T x = 0 for all extendable y
    ann = _rational_rows(null.T)
    alpha_coords = snf.integer_kernel(ann).T  # (l, 2l)
    if alpha_coords.shape[0] != genus:
        raise HomologyRankMismatch(genus, alpha_coords.shape[0], "bounding sublattice")
    qloop = np.rint(coh.loop_intersections()).astype(np.int64)
    a = np.array(alpha_coords, dtype=object)
    lhs = a.dot(qloop.astype(object))  # rows: x -> alpha_i . x
    betas_c = []
    for j in range(genus):
        e = np.zeros(genus, dtype=object)
        e[j] = 1
        sol = snf.solve_integer(lhs, e)
        if sol is None:
            raise HomologyRankMismatch(2 * genus, genus, "no integral symplectic completion")
        betas_c.append(np.array(sol, dtype=object))
    # make the betas mutually non-intersecting
    for j in range(genus):
        for i in range(j):
            m = int(np.array(betas_c[i], dtype=object).dot(qloop.astype(object)).dot(betas_c[j]))
            betas_c[j] = betas_c[j] + m * a[i]
    alphas = [_combine_loops(topo, coh, np.array(a[i], dtype=float), f"alpha_{i + 1}") for i in range(genus)]
    betas = [_combine_loops(topo, coh, np.array(betas_c[i], dtype=float), f"beta_{i + 1}") for i in range(genus)]
    return _finish_basis(mesh, coh, alphas, betas, None, per_comp, "computed",
                         {"alpha_coordinates": np.array(a, dtype=np.int64).tolist(),
                          "beta_coordinates": np.array(betas_c, dtype=np.int64).tolist()})


def _residual_vectors(mesh, cochains):
    topo = mesh.topology
    tree = spanning_tree(topo)
    free = np.nonzero(~tree & ~topo.is_boundary_edge)[0]
    fixed = topo.is_boundary_edge
    a = topo.d1[:, free].tocsc()
    rhs = -(topo.d1[:, fixed] @ cochains[fixed])
    lu = sla.splu((a.T @ a).tocsc(), permc_spec="MMD_AT_PLUS_A")
    x = lu.solve(np.asarray(a.T @ rhs))
    return np.asarray(a @ x - rhs)


def _rational_rows(m: np.ndarray) -> np.ndarray:
    """Row-reduce a real matrix spanning a rational subspace and rationalize it."""
    m = np.array(m, dtype=float)
    rows, cols = m.shape
    r = 0
    pivots = []
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[p, c]) < 1e-9:
            continue
        m[[r, p]] = m[[p, r]]
        m[r] /= m[r, c]
        for i in range(rows):
            if i != r:
                m[i] -= m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return snf.rationalize(m[:r])


def _combine_loops(topo, coh, coeffs, name) -> EdgeChain:
    vec = np.zeros(topo.n_edges)
    for c, loop in zip(coeffs, coh.loops):
        if c:
            np.add.at(vec, loop.edges, c * loop.coefficients)
    nz = np.nonzero(np.abs(vec) > 0.5)[0]
    return EdgeChain(nz, np.rint(vec[nz]), name)


# --------------------------------------------------------------------------
# functionals


def period_vector(complex_or_none, basis: HomologyBasis, v: np.ndarray) -> np.ndarray:
    """Signed sums of an edge cochain along alpha_1..alpha_l, beta_1..beta_l."""
    v = np.asarray(v)
    return np.array([c.coefficients @ v[c.edges] for c in basis.cycles], dtype=v.dtype if np.iscomplexobj(v) else float)


def flux_vector(complex_or_none, basis: HomologyBasis, u: np.ndarray) -> np.ndarray:
    """Signed sums of a face cochain over the cut surfaces."""
    if basis.cut_surfaces is None:
        raise MeshError("this homology basis carries no explicit cut surfaces; use weak_flux")
    u = np.asarray(u)
    return np.array([c.coefficients @ u[c.faces] for c in basis.cut_surfaces], dtype=u.dtype if np.iscomplexobj(u) else float)


def weak_flux(m1: sp.spmatrix, basis: HomologyBasis, v: np.ndarray) -> np.ndarray:
    """Flux of the field represented by edge cochain v through each cut surface.

    Exact for weakly divergence-free, tangential fields: it pairs v with a
    closed cochain dual to the cut surface.
    """
    if basis.genus == 0:
        return np.zeros(0)
    return basis.dual_cocycles.T @ (m1 @ v)


def crossing_number(mesh: TetMesh, path_a, path_b) -> int:
    """Signed count of transversal crossings of two closed boundary vertex paths.

    Both paths are (k, 2) arrays of consecutive oriented vertex pairs. At a
    shared vertex the sign is +1 when the outgoing direction of ``path_b``
    lies counterclockwise (seen from outside) of the outgoing direction of
    ``path_a`` within the sector bounded by path_a. This is purely
    combinatorial and independent of the cochain construction above.
    """
    topo = mesh.topology
    pa = np.asarray(path_a, dtype=np.int64).reshape(-1, 2)
    pb = np.asarray(path_b, dtype=np.int64).reshape(-1, 2)
    in_a = {b: a for a, b in pa}
    out_a = {a: b for a, b in pa}
    in_b = {b: a for a, b in pb}
    out_b = {a: b for a, b in pb}
    total = 0
    for p in set(out_a) & set(out_b):
        ring = _vertex_ring(topo, p)
        pos = {v: i for i, v in enumerate(ring)}
        n = len(ring)
        ao, ai, bo, bi = pos[out_a[p]], pos[in_a[p]], pos[out_b[p]], pos[in_b[p]]
        if len({ao, ai, bo, bi}) < 4:
            raise MeshError("paths share an edge; crossing count needs vertex-transversal paths")

        def ccw(x):  # angular position counterclockwise from a's outgoing edge
            return (x - ao) % n

        side_bo = ccw(bo) < ccw(ai)
        side_bi = ccw(bi) < ccw(ai)
        if side_bo != side_bi:
            total += 1 if side_bo else -1
    return total


def _vertex_ring(topo: Topology, p: int) -> list:
    """Neighbours of boundary vertex p in counterclockwise order seen from outside."""
    tri = topo.boundary_triangles
    rows = np.nonzero(np.any(tri == p, axis=1))[0]
    succ = {}
    for r in rows:
        t = list(tri[r])
        k = t.index(p)
        succ[t[(k + 1) % 3]] = t[(k + 2) % 3]
    start = min(succ)
    ring = [start]
    while succ[ring[-1]] != start:
        ring.append(succ[ring[-1]])
    return ring
