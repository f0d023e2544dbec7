"""Structured mesh generators for balls, solid tori and slab handlebodies.

Each generator takes an integer ``refinement``; the mesh size halves with
every level.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import MeshError
from .tetmesh import TetMesh, orient_positively


def _square_to_disk(p: np.ndarray) -> np.ndarray:
    """Map the cube/square [-1,1]^d radially onto the unit ball/disk."""
    ninf = np.abs(p).max(axis=1)
    n2 = np.linalg.norm(p, axis=1)
    scale = np.divide(ninf, n2, out=np.zeros_like(n2), where=n2 > 0)
    return p * scale[:, None]


def _kuhn_cube(n: int):
    """Grid points of [0,n]^3 and the lower corners of its unit cells."""
    g = np.arange(n + 1)
    ii, jj, kk = np.meshgrid(g, g, g, indexing="ij")
    pts = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1).astype(float)
    cells = np.stack(np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"), -1).reshape(-1, 3)
    return pts, cells


def _kuhn_tets(cells: np.ndarray, dims, center=None) -> np.ndarray:
    """Six tets per cell; vertex ids follow the (i, j, k) lexicographic grid with ``dims`` points per axis."""
    nx, ny, nz = dims

    def vid(c):
        return (c[:, 0] * ny + c[:, 1]) * nz + c[:, 2]

    if center is None:
        start = cells.copy()
        step = np.ones_like(cells)
    else:
        low = cells + 0.5 < np.asarray(center)[None, :]
        start = np.where(low, cells + 1, cells)
        step = np.where(low, -1, 1)
    tets = []
    for perm in itertools.permutations(range(3)):
        cur = start.copy()
        chain = [vid(cur)]
        for ax in perm:
            cur = cur.copy()
            cur[:, ax] += step[:, ax]
            chain.append(vid(cur))
        tets.append(np.stack(chain, axis=1))
    return np.concatenate(tets, axis=0)


def generate_ball(radius: float = 1.0, refinement: int = 2) -> TetMesh:
    """Ball of the given radius built from a radially mapped cube.

    ``refinement`` r gives 2**(r+1) cells per cube edge. Cells are split
    symmetrically about the center, so the mesh is invariant under the
    rotation group of the cube.
    """
    if radius <= 0:
        raise MeshError("radius must be positive")
    if refinement < 0:
        raise MeshError("refinement must be non-negative")
    n = 2 ** (refinement + 1)
    pts, cells = _kuhn_cube(n)
    tets = _kuhn_tets(cells, (n + 1, n + 1, n + 1), center=(n / 2, n / 2, n / 2))
    p = (2.0 * pts / n) - 1.0
    p = radius * _square_to_disk(p)
    tets = orient_positively(p, tets)
    return TetMesh(p, tets, domain_name=f"ball(r={radius:g},ref={refinement})")


def _disk_mesh(m: int):
    """Triangulated unit disk from an m x m square grid (m even)."""
    g = np.linspace(-1.0, 1.0, m + 1)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)

    def vid(i, j):
        return i * (m + 1) + j

    tris = []
    h = m / 2
    for i in range(m):
        for j in range(m):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            # diagonal through the corner nearest the center keeps the mesh symmetric
            if (i + 0.5 < h) == (j + 0.5 < h):
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return _square_to_disk(pts), np.array(tris)


def generate_solid_torus(R: float = 2.0, r: float = 0.5, refinement: int = 2, n_phi: int | None = None) -> TetMesh:
    """Solid torus of major radius R and minor radius r around the z-axis.

    The cross-section disk has 2**refinement cells per diameter; ``n_phi``
    overrides the number of layers around the axis (default: about
    isotropic cells).

    Tags: ``cut_1`` is the meridian disk at angle 0 with normal along the
    direction of increasing angle; ``alpha_1`` is its boundary circle and
    ``beta_1`` the outer equator, oriented so that alpha_1 . beta_1 = +1 on
    the outward-oriented boundary.
    """
    if not (0 < r < R):
        raise MeshError("need 0 < r < R")
    m = 2 ** max(refinement, 1)
    if n_phi is None:
        n_phi = max(8, int(round(np.pi * (R / r) * m)))
    elif n_phi < 3:
        raise MeshError("need at least 3 layers around the axis")
    p2, tri = _disk_mesh(m)
    nv2 = len(p2)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    rho = R + r * p2[:, 0]
    z = r * p2[:, 1]
    verts = np.concatenate([np.stack([rho * np.cos(ph), rho * np.sin(ph), z], axis=1) for ph in phis])

    # prisms split by the global ordering of cross-section ids (conforming across layers)
    srt = np.sort(tri, axis=1)
    a, b, c = srt[:, 0], srt[:, 1], srt[:, 2]
    tets = []
    for k in range(n_phi):
        lo, hi = k * nv2, ((k + 1) % n_phi) * nv2
        tets.append(np.stack([a + lo, b + lo, c + lo, c + hi], axis=1))
        tets.append(np.stack([a + lo, b + lo, b + hi, c + hi], axis=1))
        tets.append(np.stack([a + lo, a + hi, b + hi, c + hi], axis=1))
    tets = orient_positively(verts, np.concatenate(tets))

    # meridian disk at phi = 0, normal along +y
    cut = tri.copy()
    n = np.cross(verts[cut[:, 1]] - verts[cut[:, 0]], verts[cut[:, 2]] - verts[cut[:, 0]])
    flip = n[:, 1] < 0
    cut[flip] = cut[flip][:, [0, 2, 1]]
    alpha = _chain_boundary(cut)

    # outer equator: cross-section vertex at (+1, 0)
    v0 = int(np.argmin(np.linalg.norm(p2 - np.array([1.0, 0.0]), axis=1)))
    ring = v0 + nv2 * np.arange(n_phi)
    beta = np.stack([ring, np.roll(ring, -1)], axis=1)

    mesh = TetMesh(verts, tets, {"cut_1": cut}, {"alpha_1": alpha, "beta_1": beta},
                   domain_name=f"solid_torus(R={R:g},r={r:g},ref={refinement},n_phi={n_phi})")
    return _orient_beta(mesh)


def _chain_boundary(tris: np.ndarray) -> np.ndarray:
    """Oriented boundary edges of a triangle chain, ordered into loops where possible."""
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = {}
    for a, b in map(tuple, e):
        if (b, a) in key:
            del key[(b, a)]
        else:
            key[(a, b)] = True
    edges = list(key)
    succ = {a: b for a, b in edges}
    out = []
    remaining = set(succ)
    while remaining:
        start = min(remaining)
        cur = start
        while cur in remaining:
            remaining.discard(cur)
            out.append((cur, succ[cur]))
            cur = succ[cur]
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def _orient_beta(mesh: TetMesh) -> TetMesh:
    """Flip beta_j so that alpha_j . beta_j = +1."""
    from ..complex.homology import cycle_intersection_matrix

    names = sorted(k for k in mesh.curve_tags if k.startswith("alpha_"))
    curves = dict(mesh.curve_tags)
    cycles = [curves[n] for n in names] + [curves["beta_" + n.split("_")[1]] for n in names]
    q = cycle_intersection_matrix(mesh, cycles)
    g = len(names)
    for j, n in enumerate(names):
        if q[j, g + j] < 0:
            key = "beta_" + n.split("_")[1]
            curves[key] = curves[key][::-1, ::-1].copy()
    return TetMesh(mesh.vertices, mesh.tets, mesh.surface_tags, curves, mesh.domain_name, _topology=mesh.topology)


def generate_handlebody(genus: int, refinement: int = 1) -> TetMesh:
    """Handlebody of genus 0, 1 or 2.

    Genus 0 is the unit ball. Genus g >= 1 is the slab [0, 2g+1] x [0, 3] x
    [0, 1] with g unit square holes punched through it, at x in [2j+1, 2j+2],
    y in [1, 2]. The cut surface ``cut_j`` is the strip joining hole j to the
    face y = 0; ``alpha_j`` is its boundary and ``beta_j`` the rim of hole j
    on the top face.
    """
    if genus == 0:
        return generate_ball(1.0, refinement)
    if genus not in (1, 2):
        raise MeshError("generate_handlebody supports genus 0, 1 or 2")
    k = 2 ** refinement
    nx, ny, nz = (2 * genus + 1) * k, 3 * k, k
    cells = np.stack(np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"), -1).reshape(-1, 3)
    keep = np.ones(len(cells), bool)
    for j in range(genus):
        x0 = (2 * j + 1) * k
        keep &= ~((cells[:, 0] >= x0) & (cells[:, 0] < x0 + k) & (cells[:, 1] >= k) & (cells[:, 1] < 2 * k))
    cells = cells[keep]
    dims = (nx + 1, ny + 1, nz + 1)
    tets = _kuhn_tets(cells, dims)
    g = np.stack(np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), np.arange(nz + 1), indexing="ij"), -1).reshape(-1, 3)
    pts = g / k
    used = np.unique(tets)
    remap = -np.ones(len(pts), np.int64)
    remap[used] = np.arange(len(used))
    pts, tets, g = pts[used], remap[tets], g[used]
    tets = orient_positively(pts, tets)

    from .tetmesh import Topology

    topo = Topology(len(pts), tets)
    faces = topo.faces
    surface, curves = {}, {}
    for j in range(genus):
        xc = (2 * j + 1) * k + k // 2
        gf = g[faces]
        sel = np.all(gf[:, :, 0] == xc, axis=1) & np.all(gf[:, :, 1] <= k, axis=1)
        cut = faces[sel].copy()
        n = np.cross(pts[cut[:, 1]] - pts[cut[:, 0]], pts[cut[:, 2]] - pts[cut[:, 0]])
        flip = n[:, 0] < 0
        cut[flip] = cut[flip][:, [0, 2, 1]]
        surface[f"cut_{j + 1}"] = cut
        curves[f"alpha_{j + 1}"] = _chain_boundary(cut)
        # rim of hole j on the top face, counterclockwise seen from above
        x0, x1, y0, y1 = (2 * j + 1) * k, (2 * j + 2) * k, k, 2 * k
        loop = [(x, y0) for x in range(x0, x1)] + [(x1, y) for y in range(y0, y1)] \
            + [(x, y1) for x in range(x1, x0, -1)] + [(x0, y) for y in range(y1, y0, -1)]
        lookup = {tuple(v): i for i, v in enumerate(g)}
        ids = [lookup[(x, y, nz)] for x, y in loop]
        curves[f"beta_{j + 1}"] = np.stack([ids, np.roll(ids, -1)], axis=1)
    mesh = TetMesh(pts, tets, surface, curves, domain_name=f"handlebody(genus={genus},ref={refinement})", _topology=topo)
    return _orient_beta(mesh)
