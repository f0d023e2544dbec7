"""The scale-free eigenvalue functional |D|^(1/3) lambda_k and its gradient."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..complex.cochain import build_complex
from ..hadamard.density import (boundary_quadrature, discrete_derivative_matrix, hadamard_matrix, normal_speed,
                                volume_derivative)
from ..hadamard.tracking import ClusterState, base_cluster
from ..mesh.tetmesh import TetMesh
from ..spectrum.constraints import ConstraintHandle, constraint_space_for_mesh
from ..spectrum.lagrangian import LagrangianSpec
from ..spectrum.solver import DEFAULT_GAP_TOL, DEFAULT_TOL, lowest_positive
from .family import ShapeFamily


def normalized_eigenvalue(mesh: TetMesh, lag: LagrangianSpec | None = None, k: int = 1,
                          handle: ConstraintHandle | None = None, tol: float = DEFAULT_TOL) -> float:
    """|D|^(1/3) times the k-th positive eigenvalue (k >= 1)."""
    h = constraint_space_for_mesh(mesh, lag) if handle is None else handle
    res = lowest_positive(h, k, tol=tol)
    return float(h.complex.mesh.volume() ** (1.0 / 3.0) * res.eigenvalues[k - 1])


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Functional value at one parameter vector with the solved cluster of lambda_k."""

    c: np.ndarray
    mesh: TetMesh
    value: float
    eigenvalue: float
    volume: float
    state: ClusterState
    cluster: tuple
    separation: float

    @property
    def cluster_size(self) -> int:
        return self.state.size


@dataclass(frozen=True, eq=False)
class GradientResult:
    """Gradient of |D|^(1/3) lambda_k in the family parameters.

    ``values`` are exact derivatives of the discrete functional (for a
    cluster: of lambda_k moving in the +c_i direction); ``lower``/``upper``
    the hull of all branch derivatives; ``hadamard`` the same quantity from
    the boundary formula with the divergence-theorem volume derivative.
    """

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    hadamard: np.ndarray
    flagged: bool
    evaluation: Evaluation
    names: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "lower": self.lower.tolist(), "upper": self.upper.tolist(),
                "hadamard": self.hadamard.tolist(), "flagged": self.flagged, "norm": self.norm,
                "names": list(self.names), "cluster": list(self.evaluation.cluster)}


@dataclass(eq=False)
class ShapeProblem:
    """A shape family with a fixed boundary condition and eigenvalue index.

    The constraint gauge is built once on the base mesh and rebound to every
    deformed copy.
    """

    family: ShapeFamily
    lagrangian: LagrangianSpec | None = None
    k: int = 1
    tol: float = DEFAULT_TOL
    gap_tol: float = DEFAULT_GAP_TOL
    base_handle: ConstraintHandle | None = None

    def __post_init__(self):
        if self.base_handle is None:
            self.base_handle = constraint_space_for_mesh(self.family.base, self.lagrangian)
        self.lagrangian = self.base_handle.lagrangian

    def handle(self, c) -> ConstraintHandle:
        mesh = self.family.mesh(c)
        if mesh is self.family.base:
            return self.base_handle
        return self.base_handle.rebind(build_complex(mesh))

    def evaluate(self, c) -> Evaluation:
        c = np.asarray(c, dtype=float)
        h = self.handle(c)
        state, cluster, sep = base_cluster(h, self.k, self.gap_tol, self.tol)
        lam = float(state.eigenvalues[self.k - cluster[0]])
        vol = h.complex.mesh.volume()
        return Evaluation(c.copy(), h.complex.mesh, vol ** (1.0 / 3.0) * lam, lam, vol, state, cluster, sep)

    def gradient(self, c=None, evaluation: Evaluation | None = None, workers: int = 1) -> GradientResult:
        """Exact derivatives of the discrete functional, one component per family field.

        Components are independent after the eigensolve and run on
        ``workers`` threads.
        """
        ev = self.evaluate(c) if evaluation is None else evaluation
        state = ev.state
        cx = state.complex
        vol, lam = ev.volume, ev.eigenvalue
        pos = self.k - ev.cluster[0]                      # position of lambda_k inside its cluster
        quad = boundary_quadrature(cx)
        s13, sm23 = vol ** (1.0 / 3.0), vol ** (-2.0 / 3.0)

        def component(f):
            x = f.volumetric_displacement
            d = discrete_derivative_matrix(cx, state.potentials, lam, x)
            g = s13 * np.sort(np.linalg.eigvalsh(d)) + sm23 * lam * volume_derivative(cx, x) / 3.0
            hd = np.linalg.eigvalsh(hadamard_matrix(cx, state.vectors, lam, f, quad))
            area_flux = float(quad.integrate(normal_speed(quad, f)))
            return g[pos], g[0], g[-1], s13 * hd[pos] + sm23 * lam * area_flux / 3.0

        if workers > 1 and len(self.family.fields) > 1:
            with ThreadPoolExecutor(workers) as ex:
                rows = list(ex.map(component, self.family.fields))
        else:
            rows = [component(f) for f in self.family.fields]
        vals, lo, hi, had = (np.array(col, dtype=float) for col in zip(*rows)) if rows else (np.zeros(0),) * 4
        return GradientResult(vals, lo, hi, had, state.size > 1, ev, self.family.names,
                              {"cluster_size": state.size, "separation": ev.separation})


def gradient(family: ShapeFamily, c=None, lag: LagrangianSpec | None = None, k: int = 1,
             tol: float = DEFAULT_TOL) -> GradientResult:
    """Gradient of |D|^(1/3) lambda_k with respect to the family parameters at c."""
    c = np.zeros(family.dimension) if c is None else c
    return ShapeProblem(family, lag, k, tol).gradient(c)
