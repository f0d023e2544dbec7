"""Output writers: JSON envelopes and legacy VTK eigenfield files."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..complex.cochain import CochainComplex, tet_centroid_field, vertex_field


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (set, tuple)):
        return list(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def envelope(command: str, config, payload: dict, status: str = "ok") -> dict:
    """Standard output document: command, status, version, resolved config, timestamp, payload."""
    return {"command": command, "status": status, "version": __version__,
            "config": config.model_dump(mode="json") if config is not None else None,
            "timestamp": datetime.now(timezone.utc).isoformat(), **payload}


def write_json(path, doc: dict) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(doc, indent=2, default=_default, allow_nan=True))
    return p


def write_vtk(complex_: CochainComplex, path, fields: dict) -> Path:
    """Legacy ASCII VTK unstructured grid with eigenfields sampled at vertices and cell centroids.

    ``fields`` maps names to edge proxies. Complex fields are written as
    separate real and imaginary vector arrays.
    """
    mesh = complex_.mesh
    lines = ["# vtk DataFile Version 3.0", f"curl eigenfields on {mesh.domain_name}", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    lines += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines.append(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}")
    lines += ["4 {} {} {} {}".format(*t) for t in mesh.tets.tolist()]
    lines.append(f"CELL_TYPES {mesh.n_tets}")
    lines += ["10"] * mesh.n_tets

    def arrays(sample):
        out = []
        for name, v in fields.items():
            vals = sample(complex_, np.asarray(v))
            parts = [(name, vals.real)]
            if np.iscomplexobj(vals):
                parts = [(f"{name}_re", vals.real), (f"{name}_im", vals.imag)]
            for label, arr in parts:
                out.append(f"VECTORS {label} double")
                out += [f"{a!r} {b!r} {c!r}" for a, b, c in arr.tolist()]
        return out

    if fields:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        lines += arrays(vertex_field)
        lines.append(f"CELL_DATA {mesh.n_tets}")
        lines += arrays(tet_centroid_field)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text("\n".join(lines) + "\n")
    return p
