"""Boundary-constancy certificates for eigenvalue clusters at stationary shapes.

For M1-orthonormal eigenfields u_1..u_m the boundary density matrix
P_ij(x) = conj(u_i(x)) . u_j(x) is Hermitian, and every Hermitian H gives
the real density A(H)(x) = tr(H P(x)). If H = beta diag(tau) beta^* with
tau >= 0, then A(H) = sum_j tau_j |w_j|^2 for the rotated fields
w = U beta. The certificate searches for a trace-one PSD H making A(H)
as constant as possible on the boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..complex.cochain import CochainComplex
from ..errors import NotPSD
from ..hadamard.density import BoundaryQuadrature, boundary_density, boundary_quadrature, boundary_values

MAX_ITERATIONS = 500
PSD_CLIP = 1e-10
SUPPORT_TOL = 1e-10


def cone_decompose(H) -> tuple[np.ndarray, np.ndarray]:
    """Unitary beta and weights tau >= 0 with beta diag(tau) beta^* = H.

    Negative eigenvalues down to -1e-10 ||H|| are clipped to zero; larger
    ones raise NotPSD.
    """
    h = np.asarray(H)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("H must be a square matrix")
    h = 0.5 * (h + h.conj().T)
    tau, beta = np.linalg.eigh(h)
    clip = PSD_CLIP * max(np.linalg.norm(h, 2), 1e-300)
    if tau.size and tau[0] < -clip:
        raise NotPSD(float(tau[0]))
    order = np.argsort(-tau, kind="stable")
    return beta[:, order], np.clip(tau[order], 0.0, None)


def _project_trace_one_psd(h: np.ndarray) -> np.ndarray:
    """Frobenius projection onto {H PSD, tr H = 1}: eigenvalues onto the simplex."""
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    w = np.clip(w - css[rho] / (rho + 1), 0.0, None)
    return (v * w) @ v.conj().T


def density_matrices(complex_: CochainComplex, vectors: np.ndarray,
                     quad: BoundaryQuadrature | None = None) -> tuple[np.ndarray, BoundaryQuadrature]:
    """Face-averaged boundary density matrices P (nf, m, m) of the columns of vectors."""
    quad = boundary_quadrature(complex_) if quad is None else quad
    u = boundary_values(complex_, quad, np.asarray(vectors).reshape(len(vectors), -1))   # (q, nf, 3, m)
    p = np.einsum("qnci,qncj,q->nij", u.conj(), u, quad.weights)
    return p, quad


def constancy_residual(values: np.ndarray, areas: np.ndarray) -> tuple[float, float]:
    """(sup |a - c0| / c0, c0) with c0 the area-weighted mean of the face values a."""
    c0 = float(np.sum(values * areas) / np.sum(areas))
    if c0 <= 0:
        return float("inf"), c0
    return float(np.abs(values - c0).max() / c0), c0


@dataclass(frozen=True, eq=False)
class ExtremalityReport:
    """Best trace-one PSD combination of boundary densities found for one cluster.

    ``weights`` tau and ``basis`` beta decompose ``H``; ``rotated_vectors``
    are the edge proxies U beta of the fields whose weighted densities are
    summed. ``family_size`` counts weights above 1e-10 of the largest.
    ``residual`` is sup over boundary faces of |A(H) - c0| / c0.
    """

    cluster_size: int
    family_size: int
    H: np.ndarray
    weights: np.ndarray
    basis: np.ndarray
    rotated_vectors: np.ndarray
    residual: float
    constant: float
    rms_residual: float
    iterations: int
    converged: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        cplx = np.iscomplexobj(self.H)
        out = {"cluster_size": self.cluster_size, "family_size": self.family_size,
               "H": self.H.real.tolist(), "weights": self.weights.tolist(),
               "basis": self.basis.real.tolist(), "residual": self.residual, "constant": self.constant,
               "rms_residual": self.rms_residual, "iterations": self.iterations, "converged": self.converged,
               **self.extra}
        if cplx:
            out["H_imag"] = self.H.imag.tolist()
            out["basis_imag"] = self.basis.imag.tolist()
        return out

    def write_json(self, path) -> Path:
        p = Path(path)
        p.write_text(json.dumps(self.to_dict(), indent=2))
        return p


def extremality_certificate(complex_: CochainComplex, vectors: np.ndarray, quad: BoundaryQuadrature | None = None,
                            max_iterations: int = MAX_ITERATIONS, tol: float = 1e-12) -> ExtremalityReport:
    """Search for H >= 0, tr H = 1, making tr(H P(x)) constant on the boundary.

    Projected gradient descent on the area-weighted variance of tr(H P)
    over boundary faces, projecting onto the trace-one PSD set after every
    step (a convex problem; the iteration cap makes it a heuristic). A
    residual is always returned; infeasibility is never raised.
    """
    vecs = np.asarray(vectors)
    vecs = vecs.reshape(len(vecs), -1)
    m = vecs.shape[1]
    p, quad = density_matrices(complex_, vecs, quad)
    if not np.iscomplexobj(vecs):
        p = p.real
    w = quad.areas / quad.areas.sum()
    pc = p - np.einsum("n,nij->ij", w, p)[None]                   # centred: removes the free constant
    lip = 2.0 * float(np.einsum("n,nij,nij->", w, pc.conj(), pc).real)
    h = np.eye(m, dtype=p.dtype) / m
    it, converged = 0, m == 1
    if m > 1 and lip > 0:
        # Nesterov-accelerated projected gradient
        y, s = h.copy(), 1.0
        for it in range(1, max_iterations + 1):
            r = np.einsum("ij,nji->n", y, pc).real                 # tr(Y P_c) per face
            grad = 2.0 * np.einsum("n,n,nij->ij", w, r, pc)
            h_new = _project_trace_one_psd(y - grad / lip)
            s_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * s * s))
            y = h_new + ((s - 1.0) / s_new) * (h_new - h)
            step = np.linalg.norm(h_new - h)
            h, s = h_new, s_new
            if step < tol:
                converged = True
                break
    beta, tau = cone_decompose(h)
    a = np.einsum("ij,nji->n", h, p).real
    res, c0 = constancy_residual(a, quad.areas)
    rms = float(np.sqrt(np.sum(w * (a - c0) ** 2)) / c0) if c0 > 0 else float("inf")
    ell = int(np.sum(tau > SUPPORT_TOL * max(tau.max(initial=0.0), 1e-300)))
    return ExtremalityReport(m, ell, h, tau, beta, vecs @ beta, res, c0, rms, it, converged)


def first_eigenvalue_residual(complex_: CochainComplex, vector: np.ndarray,
                              quad: BoundaryQuadrature | None = None) -> float:
    """sup over boundary faces of ||u|^2 - 1/(3|D|)| * 3|D| for an M1-normalized field."""
    dens = boundary_density(complex_, np.asarray(vector).ravel(), quad)
    target = 1.0 / (3.0 * complex_.mesh.volume())
    return float(np.abs(dens.values - target).max() / target)
