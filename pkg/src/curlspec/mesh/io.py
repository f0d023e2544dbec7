"""TMESH ASCII read/write and a Gmsh MSH 2.2 ASCII reader."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import MeshFormatError
from .tetmesh import TetMesh, orient_positively


def write_tmesh(mesh: TetMesh, path) -> Path:
    """Write a mesh with its surface and curve tags."""
    p = Path(path)
    topo = mesh.topology
    lines = ["tmesh 1", f"# {mesh.domain_name}",
             f"{mesh.n_vertices} {topo.n_edges} {topo.n_faces} {mesh.n_tets}"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += ["t {} {} {} {}".format(*t) for t in mesh.tets.tolist()]
    for name, faces in mesh.surface_tags.items():
        lines.append(f"surface {name} {len(faces)}")
        lines += ["{} {} {}".format(*f) for f in np.asarray(faces).tolist()]
    for name, edges in mesh.curve_tags.items():
        lines.append(f"curve {name} {len(edges)}")
        lines += ["{} {}".format(*e) for e in np.asarray(edges).tolist()]
    p.write_text("\n".join(lines) + "\n")
    return p


def _tokens(path: Path):
    """Yield (line number, tokens) for non-empty lines with comments stripped."""
    with open(path) as fh:
        for no, raw in enumerate(fh, 1):
            s = raw.split("#", 1)[0].split()
            if s:
                yield no, s


def read_tmesh(path, domain_name: str | None = None) -> TetMesh:
    p = Path(path)
    it = _tokens(p)
    try:
        no, tok = next(it)
    except StopIteration:
        raise MeshFormatError(p, 0, "empty file") from None
    if tok != ["tmesh", "1"]:
        raise MeshFormatError(p, no, "expected header 'tmesh 1'")
    try:
        no, tok = next(it)
        nv, _, _, nt = map(int, tok)
    except StopIteration:
        raise MeshFormatError(p, no, "missing counts line") from None
    except ValueError:
        raise MeshFormatError(p, no, "counts line must hold four integers") from None

    verts, tets, surfaces, curves = [], [], {}, {}
    block, remaining, width = None, 0, 0
    for no, tok in it:
        try:
            if remaining:
                if len(tok) != width:
                    raise MeshFormatError(p, no, f"expected {width} indices in block {block[1]!r}")
                block[2].append([int(x) for x in tok])
                remaining -= 1
                continue
            head = tok[0]
            if head == "v":
                verts.append([float(x) for x in tok[1:4]])
                if len(tok) != 4:
                    raise MeshFormatError(p, no, "vertex line needs three coordinates")
            elif head == "t":
                if len(tok) != 5:
                    raise MeshFormatError(p, no, "tet line needs four indices")
                tets.append([int(x) for x in tok[1:5]])
            elif head in ("surface", "curve"):
                if len(tok) != 3:
                    raise MeshFormatError(p, no, f"'{head} <name> <count>' expected")
                rows = []
                (surfaces if head == "surface" else curves)[tok[1]] = rows
                block, remaining = (head, tok[1], rows), int(tok[2])
                width = 3 if head == "surface" else 2
            else:
                raise MeshFormatError(p, no, f"unknown record {head!r}")
        except ValueError as exc:
            raise MeshFormatError(p, no, str(exc)) from None
    if remaining:
        raise MeshFormatError(p, no, f"tag block {block[1]!r} is truncated")
    if len(verts) != nv or len(tets) != nt:
        raise MeshFormatError(p, no, f"counts say {nv} vertices / {nt} tets, found {len(verts)} / {len(tets)}")
    t = np.array(tets, dtype=np.int64).reshape(-1, 4)
    if t.size and (t.min() < 0 or t.max() >= nv):
        raise MeshFormatError(p, no, "tet index out of range")
    surf = {k: np.array(v, dtype=np.int64).reshape(-1, 3) for k, v in surfaces.items()}
    curv = {k: np.array(v, dtype=np.int64).reshape(-1, 2) for k, v in curves.items()}
    return TetMesh(np.array(verts, dtype=float).reshape(-1, 3), t, surf, curv, domain_name or p.stem)


def read_gmsh(path, domain_name: str | None = None) -> TetMesh:
    """Read a Gmsh MSH 2.2 ASCII file.

    Type-4 elements become tets (reoriented positively); type-2 triangles are
    grouped into surface tags ``physical_<id>`` by their physical tag.
    """
    p = Path(path)
    lines = p.read_text().splitlines()
    i = 0

    def expect(word):
        nonlocal i
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i >= len(lines) or lines[i].strip() != word:
            raise MeshFormatError(p, i + 1, f"expected {word}")
        i += 1

    nodes, node_ids, tets, tris = [], {}, [], {}
    while i < len(lines):
        s = lines[i].strip()
        if s == "$MeshFormat":
            i += 1
            ver = lines[i].split()
            if not ver or not ver[0].startswith("2"):
                raise MeshFormatError(p, i + 1, "only MSH 2.x ASCII is supported")
            if len(ver) > 1 and ver[1] != "0":
                raise MeshFormatError(p, i + 1, "binary MSH is not supported")
            i += 1
            expect("$EndMeshFormat")
        elif s == "$Nodes":
            i += 1
            n = int(lines[i])
            i += 1
            for k in range(n):
                tok = lines[i + k].split()
                node_ids[int(tok[0])] = k
                nodes.append([float(x) for x in tok[1:4]])
            i += n
            expect("$EndNodes")
        elif s == "$Elements":
            i += 1
            n = int(lines[i])
            i += 1
            for k in range(n):
                tok = [int(x) for x in lines[i + k].split()]
                etype, ntags = tok[1], tok[2]
                conn = tok[3 + ntags:]
                try:
                    ids = [node_ids[c] for c in conn]
                except KeyError:
                    raise MeshFormatError(p, i + k + 1, "element references an unknown node") from None
                if etype == 4:
                    tets.append(ids[:4])
                elif etype == 2:
                    phys = tok[3] if ntags else 0
                    tris.setdefault(f"physical_{phys}", []).append(ids[:3])
            i += n
            expect("$EndElements")
        else:
            i += 1
    if not tets:
        raise MeshFormatError(p, len(lines), "no tetrahedra found")
    v = np.array(nodes, dtype=float)
    t = np.array(tets, dtype=np.int64)
    used = np.unique(t)
    remap = -np.ones(len(v), np.int64)
    remap[used] = np.arange(len(used))
    t = orient_positively(v[used], remap[t])
    surf = {k: remap[np.array(f, dtype=np.int64)] for k, f in tris.items()}
    return TetMesh(v[used], t, surf, {}, domain_name or p.stem)


def read_mesh(path) -> TetMesh:
    """Dispatch on file suffix: ``.msh`` is Gmsh, anything else TMESH."""
    p = Path(path)
    return read_gmsh(p) if p.suffix.lower() == ".msh" else read_tmesh(p)
