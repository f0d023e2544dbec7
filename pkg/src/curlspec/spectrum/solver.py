"""Shift-invert eigensolver for curl under Lagrangian boundary conditions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as sla

from ..complex.cochain import CochainComplex
from ..complex.homology import HomologyBasis, spanning_tree, weak_flux
from ..errors import DimensionMismatch, FactorizationFailure, NoConvergence
from .constraints import ConstraintHandle, assemble_curl

DEFAULT_TOL = 1e-10
DEFAULT_GAP_TOL = 1e-3
KERNEL_THRESHOLD = 1e-6
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Eigenpairs of curl on one constraint space.

    ``eigenvectors`` are edge proxies of the eigenfields (columns,
    M1-normalized); ``potentials`` the gauge potentials they came from.
    ``residual_norms`` are relative residuals of the reduced pencil.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    potentials: np.ndarray
    residual_norms: np.ndarray
    constraint_violations: dict
    clusters: list
    harmonic_basis: np.ndarray
    kernel_dimension: int
    shift: float
    tol: float
    gap_tol: float
    orthogonality_defect: float
    metadata: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def cluster_of(self, index: int) -> tuple:
        for c in self.clusters:
            if c[0] <= index < c[1]:
                return c
        raise IndexError(index)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residual_norms": self.residual_norms.tolist(),
            "constraint_violations": {k: v.tolist() for k, v in self.constraint_violations.items()},
            "clusters": [list(c) for c in self.clusters],
            "cluster_sizes": [c[1] - c[0] for c in self.clusters],
            "harmonic_dimension": int(self.harmonic_basis.shape[1]),
            "kernel_dimension_in_realization": int(self.kernel_dimension),
            "shift": self.shift,
            "tol": self.tol,
            "gap_tol": self.gap_tol,
            "orthogonality_defect": self.orthogonality_defect,
            "metadata": self.metadata,
        }

    def write_json(self, path) -> Path:
        p = Path(path)
        p.write_text(json.dumps(self.to_dict(), indent=2, default=_json_default))
        return p


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# --------------------------------------------------------------------------
# core pencil solve


def _factorize(handle: ConstraintHandle, sigma: float, max_retries: int = 5):
    """Symmetric-mode LU of S - sigma C with the shift retry policy."""
    tried = []
    for _ in range(max_retries + 1):
        tried.append(sigma)
        try:
            lu = sla.splu((handle.s_red - sigma * handle.c_red).tocsc(), permc_spec="MMD_AT_PLUS_A",
                          diag_pivot_thresh=0.0, options={"SymmetricMode": True})
            probe = lu.solve(np.ones(handle.n_reduced))
            if np.all(np.isfinite(probe)):
                return lu, sigma
        except RuntimeError:
            pass
        sigma = sigma + 0.01 * abs(sigma)
    raise FactorizationFailure(tried)


def _negative_pivots(lu) -> int | None:
    """Inertia of the factored symmetric matrix, or None if rows were pivoted.

    Reading the pivots materializes the U factor, so this is kept off the
    routine solve path.
    """
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    return int(np.sum(lu.U.diagonal() < 0))


def count_between_zero_and(handle: ConstraintHandle, x: float) -> int:
    """Number of eigenvalues strictly between 0 and x (Sylvester inertia of S - x C)."""
    lu, used = _factorize(handle, x, max_retries=0)
    n = _negative_pivots(lu)
    if n is None:
        raise FactorizationFailure([x])
    return n


def _pencil_eigs(handle: ConstraintHandle, n_req: int, sigma: float, which: str, tol: float, lu=None):
    if sigma == 0:
        raise ValueError("shift must be nonzero (zero lies in the kernel of the realization)")
    n = handle.n_reduced
    if lu is None:
        lu, sigma = _factorize(handle, sigma)
    n_req = max(1, min(n_req, n - 2))
    op = sla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    ncv = min(n - 1, max(2 * n_req + 1, n_req + 20))
    try:
        w, y = sla.eigsh(handle.s_red, k=n_req, M=handle.c_red, sigma=sigma, mode="buckling",
                         OPinv=op, which=which, tol=tol, ncv=ncv, maxiter=max(1000, 50 * n_req),
                         v0=_start_vector(n))
    except sla.ArpackNoConvergence as exc:
        raise NoConvergence(len(exc.eigenvalues), n_req) from None
    return w, y, sigma


def _start_vector(n: int) -> np.ndarray:
    """Fixed Lanczos start vector so repeated runs return identical bases."""
    return np.random.default_rng(12345).standard_normal(n)


def _finish(handle: ConstraintHandle, w, y, sigma, tol, gap_tol, harmonic, note) -> EigenResult:
    """Recover fields, orthonormalize degenerate groups, compute diagnostics."""
    order = np.argsort(w)
    w, y = w[order], y[:, order]
    m1 = handle.complex.M1

    vals, vecs, pots = [], [], []
    i = 0
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) <= DEGENERACY_TOL * max(abs(w[i]), 1.0):
            j += 1
        a = handle.potential(y[:, i:j])
        v = handle.field_from_potential(a)
        g = v.conj().T @ (m1 @ v)
        g = (g + g.conj().T) / 2
        mu, u = np.linalg.eigh(g)
        keep = mu > 1e-6 * mu.max()
        t = u[:, keep] / np.sqrt(mu[keep])
        v, a = v @ t, a @ t
        for c in range(v.shape[1]):
            vc, ac = _fix_phase(v[:, c], a[:, c])
            vals.append(float(np.mean(w[i:j])))
            vecs.append(vc)
            pots.append(ac)
        i = j

    vals = np.array(vals)
    vecs = np.stack(vecs, axis=1) if vecs else np.zeros((m1.shape[0], 0))
    pots = np.stack(pots, axis=1) if pots else np.zeros((m1.shape[0], 0))
    gtol = DEFAULT_GAP_TOL if gap_tol is None else gap_tol
    # symmetric orthonormalization inside each near-degenerate cluster; the
    # proxies of distinct eigenvalues are orthogonal only up to discretization error
    for a0, b0 in cluster_multiplicity(vals, gtol):
        if b0 - a0 > 1:
            g = vecs[:, a0:b0].conj().T @ (m1 @ vecs[:, a0:b0])
            mu, u = np.linalg.eigh((g + g.conj().T) / 2)
            t = u @ np.diag(mu ** -0.5) @ u.conj().T
            vecs[:, a0:b0] = vecs[:, a0:b0] @ t
            pots[:, a0:b0] = pots[:, a0:b0] @ t
    res = _residuals(handle, vals, pots)
    gram = vecs.conj().T @ (m1 @ vecs)
    ortho = float(np.abs(gram - np.eye(len(vals))).max(initial=0.0))
    meta = {"reduced_dimension": handle.n_reduced, "constraint_groups": handle.group_sizes,
            "lagrangian": handle.lagrangian.to_dict(), "effective_shift": sigma,
            "domain": handle.complex.mesh.domain_name, "isotropic": handle.isotropic}
    meta.update(note)
    hb = harmonic if harmonic is not None else np.zeros((m1.shape[0], 0))
    return EigenResult(vals, vecs, pots, res, handle.violations(vecs) if len(vals) else {},
                       cluster_multiplicity(vals, gtol), hb, handle.kernel_dimension,
                       float(sigma), tol, gtol, ortho, meta)


def _fix_phase(v: np.ndarray, a: np.ndarray):
    """Deterministic sign/phase: largest-magnitude entry real and positive."""
    k = int(np.argmax(np.abs(v)))
    ph = np.abs(v[k]) / v[k] if v[k] != 0 else 1.0
    if not np.iscomplexobj(v):
        ph = float(np.sign(ph))
    return v * ph, a * ph


def _residuals(handle: ConstraintHandle, vals: np.ndarray, pots: np.ndarray) -> np.ndarray:
    """||Z^T (S - lambda C_sym) a|| / ||Z^T S a|| for each pair."""
    if pots.shape[1] == 0:
        return np.zeros(0)
    _, c_sym, _ = assemble_curl(handle.complex)
    s = handle.complex.S
    z = handle.gauge.z
    out = []
    for lam, a in zip(vals, pots.T):
        if handle.complex_mode:
            sa, ca = s @ a, c_sym @ a
            r = np.concatenate([(sa - lam * ca).real, (sa - lam * ca).imag])
            ref = np.concatenate([sa.real, sa.imag])
        else:
            r = s @ a - lam * (c_sym @ a)
            ref = s @ a
        out.append(np.linalg.norm(z.T @ r) / max(np.linalg.norm(z.T @ ref), 1e-300))
    return np.array(out)


# --------------------------------------------------------------------------
# public solvers


def solve_spectrum(handle: ConstraintHandle, k: int = 6, shift: float = 4.0, tol: float = DEFAULT_TOL,
                   gap_tol: float | None = None, harmonic: np.ndarray | None = None,
                   extra: int | None = None) -> EigenResult:
    """The k eigenpairs nearest ``shift`` (by |lambda - shift|), sorted by value.

    On factorization failure the shift is moved by +1% of its magnitude, at
    most five times, before FactorizationFailure is raised.
    """
    mult = 2 if handle.complex_mode else 1
    extra = max(4, k) if extra is None else extra
    w, y, sigma = _pencil_eigs(handle, mult * (k + extra), shift, "LM", tol)
    sel = np.argsort(np.abs(w - shift), kind="stable")[: mult * k if handle.complex_mode else k]
    # keep whole degenerate groups together
    if len(sel) < len(w):
        edge = np.abs(w[sel] - shift).max()
        sel = np.nonzero(np.abs(w - shift) <= edge * (1 + DEGENERACY_TOL) + DEGENERACY_TOL)[0]
    res = _finish(handle, w[sel], y[:, sel], sigma, tol, gap_tol, harmonic, {"mode": "nearest", "requested": k})
    return _trim(res, k, shift)


def lowest_positive(handle: ConstraintHandle, k: int = 1, tol: float = DEFAULT_TOL, shift: float | None = None,
                    gap_tol: float | None = None, harmonic: np.ndarray | None = None,
                    extra: int | None = None, verify: bool = True) -> EigenResult:
    """The k smallest positive eigenvalues (plus any exact ties with the k-th).

    Uses a positive shift below the first eigenvalue and selects the largest
    transformed eigenvalues; the shift is halved while eigenvalues are found
    between 0 and the shift. With ``verify`` the count of eigenvalues up to
    the k-th is confirmed from the inertia of S - lambda_k C.
    """
    vol = handle.complex.mesh.volume()
    sigma = 2.0 / vol ** (1.0 / 3.0) if shift is None else shift
    mult = 2 if handle.complex_mode else 1
    extra = max(6, 2 * k) if extra is None else extra
    for _ in range(30):
        lu, sigma = _factorize(handle, sigma)
        if _negative_pivots(lu) == 0:
            break
        sigma *= 0.5
    while True:
        w, y, used = _pencil_eigs(handle, mult * (k + extra), sigma, "LA", tol, lu=lu)
        pos = np.nonzero(w > 0)[0]
        pos = pos[np.argsort(w[pos])]
        if len(pos) < mult * k:
            raise NoConvergence(len(pos), k)
        kth = w[pos[mult * k - 1]]
        sel = pos[w[pos] <= kth + DEGENERACY_TOL * abs(kth)]
        if not verify or mult * (k + extra) >= handle.n_reduced - 2:
            break
        # Lanczos can miss copies of a degenerate eigenvalue; inertia counts them exactly
        expected = count_between_zero_and(handle, kth * (1.0 + 1e-6))
        if expected <= len(sel):
            break
        extra += expected - len(sel) + 4
    return _finish(handle, w[sel], y[:, sel], used, tol, gap_tol, harmonic, {"mode": "lowest_positive", "requested": k})


def _trim(res: EigenResult, k: int, shift: float) -> EigenResult:
    if res.k <= k:
        return res
    d = np.abs(res.eigenvalues - shift)
    edge = np.sort(d)[k - 1]
    keep = np.nonzero(d <= edge * (1 + DEGENERACY_TOL) + DEGENERACY_TOL)[0]
    if len(keep) == res.k:
        return res
    return _subset(res, keep)


def _subset(res: EigenResult, keep) -> EigenResult:
    keep = np.asarray(keep)
    vals = res.eigenvalues[keep]
    return EigenResult(vals, res.eigenvectors[:, keep], res.potentials[:, keep], res.residual_norms[keep],
                       {k: v[keep] for k, v in res.constraint_violations.items()},
                       cluster_multiplicity(vals, res.gap_tol), res.harmonic_basis, res.kernel_dimension,
                       res.shift, res.tol, res.gap_tol, res.orthogonality_defect, dict(res.metadata))


# --------------------------------------------------------------------------
# harmonic fields


@dataclass(frozen=True, eq=False)
class HarmonicFields:
    """M1-orthonormal harmonic fields (E x l) with their weak fluxes through the cut surfaces.

    ``kernel_values`` are the curl-curl Rayleigh quotients of the kernel
    vectors and ``first_nonzero`` the smallest nonzero one; the kernel is
    counted as the quotients below KERNEL_THRESHOLD times that value.
    """

    fields: np.ndarray
    flux_matrix: np.ndarray
    condition_number: float
    kernel_values: np.ndarray
    first_nonzero: float

    @property
    def dimension(self) -> int:
        return self.fields.shape[1]


def harmonic_fields(complex_: CochainComplex, basis: HomologyBasis, tol: float = DEFAULT_TOL) -> HarmonicFields:
    """Kernel of curl on divergence-free, boundary-tangent edge fields.

    Closed fields are found as the kernel of the curl-curl matrix on the
    tree-gauged edge space (gradients removed by the gauge); the count is
    made from the spectrum, not assumed, and must equal the boundary genus.
    """
    topo = complex_.topology
    cot = np.nonzero(~spanning_tree(topo))[0]
    s = complex_.S[cot][:, cot].tocsc()
    m = complex_.M1[cot][:, cot].tocsc()
    ell = basis.genus
    scale = complex_.mesh.volume() ** (-2.0 / 3.0)
    nreq = min(ell + 3, len(cot) - 2)
    lu = sla.splu((s + scale * m).tocsc(), permc_spec="MMD_AT_PLUS_A")
    op = sla.LinearOperator(s.shape, matvec=lu.solve, dtype=float)
    mu, x = sla.eigsh(s, k=nreq, M=m, sigma=-scale, which="LM", OPinv=op, tol=tol)
    order = np.argsort(mu)
    mu, x = mu[order], x[:, order]
    mu = np.abs(mu)
    nonzero = mu[mu > KERNEL_THRESHOLD * mu.max()]
    first = float(nonzero.min()) if len(nonzero) else float("inf")
    count = int(np.sum(mu < KERNEL_THRESHOLD * first))
    if count != ell:
        raise DimensionMismatch(ell, count)
    z = np.zeros((topo.n_edges, count))
    z[cot] = x[:, :count]
    # Coulomb projection against all vertex functions, then M1-orthonormalize
    lap = (complex_.d0.T @ complex_.M1 @ complex_.d0).tocsc()
    keep = np.arange(1, lap.shape[0])
    phi = np.zeros((lap.shape[0], count))
    if count:
        phi[keep] = sla.splu(lap[keep][:, keep].tocsc()).solve(np.asarray((complex_.d0.T @ (complex_.M1 @ z))[keep]))
    h = z - complex_.d0 @ phi
    if count:
        g = h.T @ (complex_.M1 @ h)
        w, u = np.linalg.eigh((g + g.T) / 2)
        h = h @ (u / np.sqrt(w)) @ u.T
        flux = weak_flux(complex_.M1, basis, h).reshape(ell, count)
        cond = float(np.linalg.cond(flux))
    else:
        flux, cond = np.zeros((0, 0)), 1.0
    return HarmonicFields(h, flux, cond, mu[:count], first)


# --------------------------------------------------------------------------
# diagnostics


def cluster_multiplicity(eigenvalues, gap_tol: float = DEFAULT_GAP_TOL) -> list:
    """Maximal runs (start, stop) whose consecutive relative gaps are below gap_tol."""
    lam = np.asarray(eigenvalues, float)
    if len(lam) == 0:
        return []
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be sorted")
    out, start = [], 0
    for i in range(1, len(lam)):
        gap = (lam[i] - lam[i - 1]) / max(abs(lam[i]), abs(lam[i - 1]), 1e-300)
        if not gap < gap_tol:
            out.append((start, i))
            start = i
    out.append((start, len(lam)))
    return out


def richardson_gap_tol(coarse, fine, order: float = 2.0, factor: float = 10.0, floor: float = 1e-6) -> float:
    """factor x the relative discretization error of ``fine`` estimated from two levels (h, 2h)."""
    c = np.atleast_1d(np.asarray(coarse, float))
    f = np.atleast_1d(np.asarray(fine, float))
    err = np.abs(f - c) / (2.0 ** order - 1.0) / np.abs(f)
    return float(max(factor * err.max(), floor))


def check_selfadjointness(handle: ConstraintHandle, result: EigenResult) -> dict:
    """Boundary-pairing defect max |v_i^T (C - C^T) v_j| among returned eigenvectors.

    ``relative`` divides by max |lambda| so the value is scale free and
    comparable with the solver tolerance.
    """
    _, _, skew = assemble_curl(handle.complex)
    v = result.eigenvectors
    if v.shape[1] == 0:
        return {"defect": 0.0, "relative": 0.0}
    d = v.conj().T @ (skew @ v)
    raw = float(np.abs(d).max())
    return {"defect": raw, "relative": raw / float(np.abs(result.eigenvalues).max())}
