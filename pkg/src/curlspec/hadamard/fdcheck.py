"""Finite-difference validation of the boundary shape-derivative formula."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..mesh.deform import DeformationField
from ..spectrum.constraints import ConstraintHandle
from ..spectrum.solver import DEFAULT_GAP_TOL, DEFAULT_TOL
from .density import boundary_density, boundary_quadrature, hadamard_matrix, normal_speed, shape_derivative
from .tracking import aligned_basis, base_cluster, branch_slopes, track_family

DEFAULT_SWEEP = (2.0, 1.0, 0.5, 0.25)


@dataclass(frozen=True, eq=False)
class FDReport:
    """Formula versus central differences for every branch of one cluster.

    ``fd_values[i, j]`` is the central difference of branch j with step
    ``deltas[i]``; ``fd_value`` uses the base step. ``error`` is the
    relative error against the derivative itself, or against the integrand
    size ``scale`` = lambda * integral |f| |u|^2 where the derivative is below
    1% of that size (``error_basis`` says which).
    """

    field: str
    k: int
    cluster: tuple
    eigenvalue: float
    deltas: np.ndarray
    fd_values: np.ndarray
    formula_values: np.ndarray
    discrete_values: np.ndarray
    scale: np.ndarray
    cross_term_ratio: float
    mesh_quality: dict
    extra: dict = field(default_factory=dict)

    @property
    def fd_value(self) -> np.ndarray:
        i = int(np.argmin(np.abs(self.deltas - self.extra.get("base_delta", self.deltas[-1]))))
        return self.fd_values[i]

    @property
    def relative_error(self) -> np.ndarray:
        return np.abs(self.fd_value - self.formula_values) / np.maximum(np.abs(self.formula_values), 1e-300)

    @property
    def scaled_error(self) -> np.ndarray:
        return np.abs(self.fd_value - self.formula_values) / np.maximum(self.scale, 1e-300)

    @property
    def error_basis(self) -> list:
        return ["derivative" if abs(f) >= 0.01 * s else "scale" for f, s in zip(self.formula_values, self.scale)]

    @property
    def error(self) -> np.ndarray:
        return np.array([r if b == "derivative" else s for r, s, b in
                         zip(self.relative_error, self.scaled_error, self.error_basis)])

    @property
    def sweep_orders(self) -> np.ndarray:
        """log2 ratios of successive FD differences (about 2 before roundoff), shape (n_delta - 2, m)."""
        d = np.abs(np.diff(self.fd_values, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(d[:-1] / d[1:]) / np.log(self.deltas[:-2] / self.deltas[1:-1])[:, None]

    @property
    def extrapolated(self) -> np.ndarray:
        """Richardson extrapolation of the two smallest steps."""
        r = (self.deltas[-2] / self.deltas[-1]) ** 2
        return (r * self.fd_values[-1] - self.fd_values[-2]) / (r - 1.0)

    def table(self) -> list:
        """Rows (delta, branch, fd, formula, discrete, error) of the sweep."""
        rows = []
        for i, d in enumerate(self.deltas):
            for j in range(len(self.formula_values)):
                err = abs(self.fd_values[i, j] - self.formula_values[j])
                base = abs(self.formula_values[j]) if self.error_basis[j] == "derivative" else self.scale[j]
                rows.append({"delta": float(d), "branch": self.cluster[0] + j, "fd": float(self.fd_values[i, j]),
                             "formula": float(self.formula_values[j]), "discrete": float(self.discrete_values[j]),
                             "error": float(err / max(base, 1e-300))})
        return rows

    def to_dict(self) -> dict:
        return {"field": self.field, "k": self.k, "cluster": list(self.cluster), "eigenvalue": self.eigenvalue,
                "deltas": self.deltas.tolist(), "fd_values": self.fd_values.tolist(),
                "fd_value": self.fd_value.tolist(), "formula_values": self.formula_values.tolist(),
                "discrete_values": self.discrete_values.tolist(), "scale": self.scale.tolist(),
                "relative_error": self.relative_error.tolist(), "scaled_error": self.scaled_error.tolist(),
                "error": self.error.tolist(), "error_basis": self.error_basis,
                "sweep_orders": np.nan_to_num(self.sweep_orders, nan=0.0, posinf=0.0).tolist(),
                "extrapolated": self.extrapolated.tolist(), "cross_term_ratio": self.cross_term_ratio,
                "mesh_quality": self.mesh_quality, "table": self.table(), **self.extra}

    def write_json(self, path) -> Path:
        p = Path(path)
        p.write_text(json.dumps(self.to_dict(), indent=2))
        return p


def fd_check(handle: ConstraintHandle, field: DeformationField, k: int = 1, delta: float | None = None,
             sweep=DEFAULT_SWEEP, gap_tol: float = DEFAULT_GAP_TOL, tol: float = DEFAULT_TOL,
             workers: int = 1) -> FDReport:
    """Compare the boundary formula with central differences of tracked branches.

    ``delta`` defaults to 1e-3 times the domain diameter; the sweep uses the
    steps ``sweep`` times delta, ordered from large to small, and the report
    compares at delta itself. Degenerate clusters are compared branch by
    branch in the aligned basis. Independent steps run on ``workers``
    threads.
    """
    cx = handle.complex
    mesh = cx.mesh
    d0 = 1e-3 * mesh.diameter() if delta is None else float(delta)
    deltas = np.array(sorted((float(s) * d0 for s in sweep), reverse=True))
    start, cluster, _ = base_cluster(handle, k, gap_tol, tol)
    start = aligned_basis(start, field, d0, tol)
    lam = start.mean

    quad = boundary_quadrature(cx)
    formula, scale = [], []
    fabs = np.abs(normal_speed(quad, field))
    for j, lam_j in enumerate(start.eigenvalues):
        dens = boundary_density(cx, start.vectors[:, j], quad)
        formula.append(shape_derivative(lam_j, dens, field))
        scale.append(abs(lam_j) * float(quad.integrate(fabs * dens.point_values)))
    h = hadamard_matrix(cx, start.vectors, lam, field, quad)
    off = h - np.diag(np.diag(h))
    cross = float(np.abs(off).max() / max(np.max(scale), 1e-300)) if start.size > 1 else 0.0
    disc = branch_slopes(start, field.volumetric_displacement)

    def one(d):
        br = track_family(handle, field, [-d, d], k=cluster[0], start=start, align=False, tol=tol)
        return (br.eigenvalues[-1] - br.eigenvalues[0]) / (2 * d)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            fd = list(ex.map(one, deltas))
    else:
        fd = [one(d) for d in deltas]
    return FDReport(field.description, k, cluster, lam, deltas, np.array(fd), np.array(formula), disc,
                    np.array(scale), cross, mesh.quality(), {"base_delta": d0})
