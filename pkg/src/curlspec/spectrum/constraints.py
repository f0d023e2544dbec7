"""Constraint spaces for curl eigenfields under a Lagrangian boundary condition.

Eigenfields are computed through a vector potential ``a`` on edges: the field
is u = curl a, and the eigenproblem curl u = lambda u becomes the symmetric
pencil S a = lambda C_sym a. The potential lives in a tree-cotree gauge:

* edges of a spanning tree are fixed to zero (removes gradients),
* interior cotree edges are free,
* the boundary trace of ``a`` is a closed boundary cochain whose class lies
  in the admissible subspace null(F); it is parameterized by the cocycles
  dual to the homology basis,
* closed potentials left in the space (harmonic fields whose class is
  admissible) span the kernel of both S and C and are removed by pinning a
  few coordinates.

The edge proxy of the eigenfield is recovered from ``a`` by removing its
gradient and admissible-harmonic components in the M1 inner product, which
enforces d0^T M1 v = 0 against all vertex functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla_dense
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from ..complex.cochain import CochainComplex, build_complex
from ..complex.homology import HomologyBasis, homology_basis, period_vector, spanning_tree, weak_flux
from ..errors import InconsistentLagrangian
from .lagrangian import LagrangianSpec


def assemble_curl(complex_: CochainComplex):
    """(C, C_sym, skew_defect) with C[i, j] = integral of curl W_j . W_i."""
    c = complex_.C
    return c, ((c + c.T) * 0.5).tocsr(), (c - c.T).tocsr()


@dataclass(frozen=True, eq=False)
class Gauge:
    """Combinatorial part of a constraint space; reusable across deformations of one mesh.

    ``z`` maps reduced coordinates to (realified) edge potentials. In complex
    mode rows [0, E) hold real parts and rows [E, 2E) imaginary parts.
    """

    free_edges: np.ndarray
    classes: np.ndarray          # (2l, r) admissible period vectors
    z: sp.csr_matrix
    pins: np.ndarray
    kernel_potentials: np.ndarray  # closed admissible potentials (E x k), real or complex
    complex_mode: bool
    n_edges: int


@dataclass(frozen=True, eq=False)
class ConstraintHandle:
    """Constraint space bound to one mesh geometry.

    Groups: divergence (d0^T M1 v = 0, one row per vertex), flux (zero_flux
    preset only, one row per cut surface) and period (F P(v) = 0, rows of F).
    """

    complex: CochainComplex
    basis: HomologyBasis
    lagrangian: LagrangianSpec
    gauge: Gauge
    isotropic: bool
    s_red: sp.csc_matrix
    c_red: sp.csc_matrix
    harmonic_admissible: np.ndarray   # M1-orthonormal harmonic fields with admissible class
    group_sizes: dict = field(default_factory=dict)
    _lap: object = None

    @property
    def n_reduced(self) -> int:
        return self.s_red.shape[0]

    @property
    def complex_mode(self) -> bool:
        return self.gauge.complex_mode

    @property
    def kernel_dimension(self) -> int:
        return self.harmonic_admissible.shape[1]

    def potential(self, y: np.ndarray) -> np.ndarray:
        """Edge potential(s) from reduced coordinates (columns)."""
        a = self.gauge.z @ y
        if self.complex_mode:
            e = self.gauge.n_edges
            return a[:e] + 1j * a[e:]
        return a

    def gradient_part(self, a: np.ndarray) -> np.ndarray:
        """d0 phi with d0^T M1 (a - d0 phi) = 0 (one vertex grounded)."""
        cx = self.complex
        rhs = cx.d0.T @ (cx.M1 @ a)
        phi = np.zeros((cx.d0.shape[1],) + a.shape[1:], dtype=np.result_type(a, float))
        lu, keep = self._lap
        sol = lu.solve(np.asarray(rhs[keep]).real)
        if np.iscomplexobj(a):
            sol = sol + 1j * lu.solve(np.asarray(rhs[keep]).imag)
        phi[keep] = sol
        return cx.d0 @ phi

    def field_from_potential(self, a: np.ndarray) -> np.ndarray:
        """Edge proxy v: a minus its gradient and admissible-harmonic parts."""
        v = a - self.gradient_part(a)
        h = self.harmonic_admissible
        if h.shape[1]:
            v = v - h @ (h.conj().T @ (self.complex.M1 @ v))
        return v

    def violations(self, v: np.ndarray) -> dict:
        """Relative constraint residuals of edge fields (columns)."""
        cx = self.complex
        v2 = v.reshape(len(v), -1)
        mv = cx.M1 @ v2
        scale = np.sqrt(np.abs(np.einsum("ij,ij->j", v2.conj(), mv))) + 1e-300
        div = np.abs(cx.d0.T @ mv).max(axis=0) / scale
        out = {"divergence": div}
        ell = self.basis.genus
        if ell:
            per = np.stack([period_vector(cx, self.basis, v2[:, j]) for j in range(v2.shape[1])], axis=1)
            out["period"] = np.abs(self.lagrangian.F @ per).max(axis=0) / scale if self.lagrangian.F.size else np.zeros(v2.shape[1])
            if self.lagrangian.preset_name == "zero_flux":
                out["flux"] = np.abs(weak_flux(cx.M1, self.basis, v2)).reshape(ell, -1).max(axis=0) / scale
        return {k: np.asarray(val, float).ravel() for k, val in out.items()}

    def rebind(self, complex_: CochainComplex) -> "ConstraintHandle":
        """Same gauge and boundary condition on a deformed copy of the mesh."""
        return _bind(complex_, self.basis, self.lagrangian, self.gauge, self.isotropic)


def _closed_potentials(complex_: CochainComplex, basis: HomologyBasis, classes: np.ndarray) -> np.ndarray:
    """Tree-gauged closed volume cochains whose boundary class lies in span(classes)."""
    ell = basis.genus
    if ell == 0 or classes.shape[1] == 0:
        return np.zeros((complex_.n_edges, 0))
    k_vol = basis.dual_cocycles                          # E x l, closed, spans H^1(D)
    per = np.stack([period_vector(complex_, basis, k_vol[:, j]) for j in range(ell)], axis=1)
    # components of the periods orthogonal to the admissible classes must vanish
    q, _ = np.linalg.qr(classes, mode="complete") if classes.shape[1] < 2 * ell else (None, None)
    if q is None:
        return k_vol.copy()
    comp = q[:, classes.shape[1]:].conj().T @ per
    _, s, vh = np.linalg.svd(comp)
    rank = int(np.sum(s > 1e-9 * max(1.0, s.max(initial=0.0))))
    w = vh[rank:].conj().T
    return k_vol @ w


def build_gauge(complex_: CochainComplex, basis: HomologyBasis, lag: LagrangianSpec) -> Gauge:
    topo = complex_.topology
    ne = topo.n_edges
    tree = spanning_tree(topo)
    free = np.nonzero(~tree & ~topo.is_boundary_edge)[0]
    classes = lag.admissible_classes() if basis.genus else np.zeros((0, 0))
    complex_mode = not lag.reality_flag
    xi = basis.boundary_cocycles                         # E x 2l, dual to (alpha, beta)
    bcols = xi @ classes if classes.size else np.zeros((ne, 0))
    nfree = len(free)
    kernel = _closed_potentials(complex_, basis, classes)

    if not complex_mode:
        eye = sp.csr_matrix((np.ones(nfree), (free, np.arange(nfree))), shape=(ne, nfree))
        z = sp.hstack([eye, sp.csr_matrix(bcols)]).tocsr()
        coords = _reduced_coordinates(kernel, free, bcols)
    else:
        br, bi = bcols.real, bcols.imag
        eye = sp.csr_matrix((np.ones(nfree), (free, np.arange(nfree))), shape=(ne, nfree))
        zero = sp.csr_matrix((ne, nfree))
        top = sp.hstack([eye, zero, sp.csr_matrix(br), sp.csr_matrix(-bi)])
        bot = sp.hstack([zero, eye, sp.csr_matrix(bi), sp.csr_matrix(br)])
        z = sp.vstack([top, bot]).tocsr()
        kr = np.hstack([kernel, 1j * kernel]) if kernel.shape[1] else kernel
        coords = _reduced_coordinates_complex(kr, free, bcols)

    pins = np.zeros(0, dtype=np.int64)
    if coords.shape[1]:
        _, _, piv = sla_dense.qr(coords.T, pivoting=True, mode="economic")
        pins = np.sort(piv[: coords.shape[1]])
        keep = np.setdiff1d(np.arange(z.shape[1]), pins)
        z = z[:, keep].tocsr()
    return Gauge(free, classes, z, pins, kernel, complex_mode, ne)


def _reduced_coordinates(kernel, free, bcols):
    if kernel.shape[1] == 0:
        return np.zeros((len(free) + bcols.shape[1], 0))
    yb = np.linalg.lstsq(bcols, kernel, rcond=None)[0]
    return np.vstack([kernel[free], yb])


def _reduced_coordinates_complex(kernel, free, bcols):
    nfree, r = len(free), bcols.shape[1]
    if kernel.shape[1] == 0:
        return np.zeros((2 * nfree + 2 * r, 0))
    c = np.linalg.lstsq(bcols, kernel, rcond=None)[0]
    return np.vstack([kernel[free].real, kernel[free].imag, c.real, c.imag])


def _grounded_laplacian(complex_: CochainComplex):
    lap = (complex_.d0.T @ complex_.M1 @ complex_.d0).tocsc()
    keep = np.arange(1, lap.shape[0])
    return sla.splu(lap[keep][:, keep].tocsc(), permc_spec="MMD_AT_PLUS_A"), keep


def _bind(complex_, basis, lag, gauge, isotropic) -> ConstraintHandle:
    _, c_sym, _ = assemble_curl(complex_)
    s, c = complex_.S, c_sym
    if gauge.complex_mode:
        s = sp.block_diag([s, s])
        c = sp.block_diag([c, c])
    z = gauge.z
    s_red = (z.T @ s @ z).tocsc()
    c_red = (z.T @ c @ z).tocsc()
    lap = _grounded_laplacian(complex_)
    handle = ConstraintHandle(complex_, basis, lag, gauge, isotropic, s_red, c_red,
                              np.zeros((complex_.n_edges, 0)), {}, lap)
    # admissible harmonic fields: Coulomb-projected closed potentials, M1-orthonormal
    k = gauge.kernel_potentials
    if k.shape[1]:
        h = k - handle.gradient_part(k)
        h = _m1_orthonormalize(complex_.M1, h)
        object.__setattr__(handle, "harmonic_admissible", h)
    ell = basis.genus
    sizes = {"divergence": complex_.d0.shape[1],
             "flux": ell if lag.preset_name == "zero_flux" else 0,
             "period": lag.F.shape[0] if ell else 0,
             "pinned": len(gauge.pins),
             "reduced_dimension": s_red.shape[0]}
    object.__setattr__(handle, "group_sizes", sizes)
    return handle


def _m1_orthonormalize(m1, h: np.ndarray) -> np.ndarray:
    g = h.conj().T @ (m1 @ h)
    w, u = np.linalg.eigh((g + g.conj().T) / 2)
    return h @ (u / np.sqrt(w)) @ u.conj().T


def constraint_space(complex_: CochainComplex, basis: HomologyBasis | None = None,
                     lag: LagrangianSpec | None = None, check: bool = True) -> ConstraintHandle:
    """Constraint handle for the given boundary condition (zero_flux by default).

    With ``check=False`` a non-isotropic F is accepted; the resulting operator
    is not self-adjoint and serves as a negative control.
    """
    basis = homology_basis(complex_.mesh) if basis is None else basis
    lag = LagrangianSpec.zero_flux(basis.genus) if lag is None else lag
    isotropic = True
    if basis.genus:
        if lag.F.shape[1] != 2 * basis.genus:
            raise InconsistentLagrangian(f"constraint matrix needs {2 * basis.genus} columns, got {lag.F.shape[1]}")
        if check:
            lag.validate(basis.intersection_matrix)
        else:
            isotropic = lag.isotropy_defect(basis.intersection_matrix) < 1e-10 and lag.admissible_classes().shape[1] == basis.genus
    elif lag.F.size:
        raise InconsistentLagrangian("a domain with sphere boundaries admits no period constraints")
    gauge = build_gauge(complex_, basis, lag)
    return _bind(complex_, basis, lag, gauge, isotropic)


def constraint_space_for_mesh(mesh, lag: LagrangianSpec | None = None, check: bool = True) -> ConstraintHandle:
    cx = build_complex(mesh)
    return constraint_space(cx, homology_basis(mesh), lag, check)
