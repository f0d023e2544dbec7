"""Eigenvalue-cluster tracking along a one-parameter deformation family."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..complex.cochain import build_complex
from ..errors import BranchLoss
from ..mesh.deform import DeformationField, deform
from ..spectrum.constraints import ConstraintHandle
from .density import discrete_branch_slopes
from ..spectrum.solver import DEFAULT_GAP_TOL, DEFAULT_TOL, DEGENERACY_TOL, lowest_positive, solve_spectrum

OVERLAP_THRESHOLD = 0.8


@dataclass(frozen=True, eq=False)
class ClusterState:
    """One solved cluster: eigenvalues, M1-orthonormal fields and their potentials."""

    t: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    potentials: np.ndarray
    complex: object
    handle: ConstraintHandle

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def mean(self) -> float:
        return float(np.mean(self.eigenvalues))


@dataclass(frozen=True, eq=False)
class TrackedBranch:
    """Branch curves of one eigenvalue cluster.

    ``eigenvalues[i, j]`` is branch j at ``t[i]``; ``overlaps[i]`` the
    smallest principal-angle cosine between the cluster spaces at t[i] and
    the neighbouring sample closer to t = 0 (1 at t = 0).
    """

    t: np.ndarray
    eigenvalues: np.ndarray
    overlaps: np.ndarray
    cluster: tuple
    states: list = field(default_factory=list, repr=False)
    description: str = ""

    @property
    def n_branches(self) -> int:
        return self.eigenvalues.shape[1]

    def at(self, t: float) -> ClusterState:
        i = int(np.argmin(np.abs(self.t - t)))
        return self.states[i]

    def pairwise_gaps(self) -> np.ndarray:
        """Smallest gap between sorted branch values at every sample."""
        s = np.sort(self.eigenvalues, axis=1)
        return np.diff(s, axis=1).min(axis=1) if self.n_branches > 1 else np.full(len(self.t), np.inf)

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "eigenvalues": self.eigenvalues.tolist(), "overlaps": self.overlaps.tolist(),
                "cluster": list(self.cluster), "description": self.description}

    def write_csv(self, path) -> Path:
        p = Path(path)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"lambda_{self.cluster[0] + j}" for j in range(self.n_branches)] + ["overlap"])
            for t, lam, ov in zip(self.t, self.eigenvalues, self.overlaps):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in lam] + [repr(float(ov))])
        return p

    def write_json(self, path) -> Path:
        p = Path(path)
        p.write_text(json.dumps(self.to_dict(), indent=2))
        return p


def base_cluster(handle: ConstraintHandle, k: int, gap_tol: float = DEFAULT_GAP_TOL, tol: float = DEFAULT_TOL):
    """Solve for the cluster containing the k-th positive eigenvalue (k >= 1).

    Returns (ClusterState, (first, last) 1-based indices, relative separation
    from the neighbouring eigenvalues).
    """
    if k < 1:
        raise ValueError("k counts positive eigenvalues from 1")
    want = k + 2
    while True:
        res = lowest_positive(handle, want, tol=tol, gap_tol=gap_tol)
        cl = [c for c in res.clusters if c[0] <= k - 1 < c[1]][0]
        if cl[1] < res.k:
            break
        want = res.k + 3
    lam = res.eigenvalues
    lo, hi = cl
    sep_lo = (lam[lo] - lam[lo - 1]) / lam[lo] if lo > 0 else np.inf
    sep_hi = (lam[hi] - lam[hi - 1]) / lam[hi - 1]
    state = ClusterState(0.0, lam[lo:hi].copy(), res.eigenvectors[:, lo:hi], res.potentials[:, lo:hi],
                         handle.complex, handle)
    return state, (lo + 1, hi), float(min(sep_lo, sep_hi))


def _gram(m1, a, b):
    return a.conj().T @ (m1 @ b)


def _exact_groups(vals) -> list:
    out, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or abs(vals[i] - vals[start]) > DEGENERACY_TOL * max(abs(vals[start]), 1.0):
            out.append(np.arange(start, i))
            start = i
    return out


def branch_slopes(state: ClusterState, displacement: np.ndarray) -> np.ndarray:
    """Exact derivatives of the discrete eigenvalues of each column along a displacement."""
    return discrete_branch_slopes(state.complex, state.potentials, state.eigenvalues, displacement)


def solve_cluster(handle: ConstraintHandle, reference: ClusterState, t: float, tol: float = DEFAULT_TOL,
                  threshold: float = OVERLAP_THRESHOLD, shift: float | None = None) -> tuple[ClusterState, float, np.ndarray]:
    """Solve near the reference cluster and match eigenvectors branch by branch.

    The shift defaults to the reference cluster mean. Returns the new state
    with columns ordered and phased like the reference, the smallest
    principal-angle cosine, and the overlap matrix.
    """
    m = reference.size
    shift = reference.mean if shift is None else shift
    # a wide window: neighbouring clusters may drift past the shift before this one does
    res = solve_spectrum(handle, k=2 * m + 4, shift=shift, tol=tol)
    m1 = handle.complex.M1
    # re-orthonormalize the reference in the new metric so overlaps are true cosines
    g = _gram(m1, reference.vectors, reference.vectors)
    w, u = np.linalg.eigh((g + g.conj().T) / 2)
    ref = reference.vectors @ (u @ np.diag(w ** -0.5) @ u.conj().T)
    o = _gram(m1, ref, res.eigenvectors)                         # (m, n)
    weight = np.sum(np.abs(o) ** 2, axis=0)
    cand = np.sort(np.argsort(-weight, kind="stable")[:m])
    # pull in exact ties of selected candidates so degenerate groups are complete
    lam_all = res.eigenvalues
    cand = np.unique(np.concatenate([np.nonzero(np.abs(lam_all - lam_all[c]) <= DEGENERACY_TOL * abs(lam_all[c]))[0]
                                     for c in cand]))
    if len(cand) > m:
        cand = cand[np.argsort(-weight[cand], kind="stable")[:m]]
        cand = np.sort(cand)
    vals = lam_all[cand]
    vecs, pots = res.eigenvectors[:, cand], res.potentials[:, cand]
    o = o[:, cand]
    cos = float(np.linalg.svd(o, compute_uv=False).min())
    if cos < threshold:
        raise BranchLoss(t, cos)
    rows, cols = linear_sum_assignment(-np.abs(o) ** 2)
    perm = np.empty(m, dtype=int)
    perm[rows] = cols
    vals, vecs, pots, o = vals[perm], vecs[:, perm], pots[:, perm], o[:, perm]
    # inside exactly degenerate groups the basis is free: rotate towards the reference
    for g in _exact_groups_unsorted(vals):
        if len(g) > 1:
            p, _, qh = np.linalg.svd(o[np.ix_(g, g)].conj().T)
            rot = p @ qh
            vecs[:, g] = vecs[:, g] @ rot
            pots[:, g] = pots[:, g] @ rot
    d = np.einsum("ij,ij->j", ref.conj(), m1 @ vecs)
    ph = np.where(np.abs(d) > 0, np.abs(d) / np.where(d == 0, 1, d), 1.0)
    if not np.iscomplexobj(vecs):
        ph = np.sign(ph.real)
    vecs, pots = vecs * ph, pots * ph
    state = ClusterState(t, vals, vecs, pots, handle.complex, handle)
    return state, cos, _gram(m1, ref, vecs)


def _exact_groups_unsorted(vals) -> list:
    order = np.argsort(vals, kind="stable")
    return [order[g] for g in _exact_groups(vals[order])]


def deformed_handle(base: ConstraintHandle, field: DeformationField, t: float) -> ConstraintHandle:
    """Constraint space of the base handle on the mesh moved by t * X."""
    return base.rebind(build_complex(deform(base.complex.mesh, field, t)))


def aligned_basis(state: ClusterState, field: DeformationField, probe: float,
                  tol: float = DEFAULT_TOL) -> ClusterState:
    """Rotate each exactly degenerate eigenspace to the limit of the branch eigenvectors.

    The cluster is solved at t = probe and, inside every group of equal
    eigenvalues, the probe eigenvectors are projected back onto the t = 0
    eigenspace (P(0) P(probe)) and symmetrically orthonormalized. The result
    approximates the analytic branch basis to O(probe). Eigenvectors of
    distinct eigenvalues are already branch vectors and are kept.
    """
    groups = [g for g in _exact_groups_unsorted(state.eigenvalues) if len(g) > 1]
    if not groups:
        return state
    h = deformed_handle(state.handle, field, probe)
    shift = state.mean + float(np.mean(branch_slopes(state, field.volumetric_displacement))) * probe
    probed, _, _ = solve_cluster(h, state, probe, tol=tol, shift=shift)
    m1 = state.complex.M1
    vecs, pots = state.vectors.copy(), state.potentials.copy()
    for g in groups:
        coef = _gram(m1, state.vectors[:, g], probed.vectors[:, g])   # projection onto the t = 0 eigenspace
        w, u = np.linalg.eigh(coef.conj().T @ coef)
        rot = coef @ u @ np.diag(w ** -0.5) @ u.conj().T
        vecs[:, g] = state.vectors[:, g] @ rot
        pots[:, g] = state.potentials[:, g] @ rot
    return ClusterState(0.0, state.eigenvalues.copy(), vecs, pots, state.complex, state.handle)


def track_family(handle: ConstraintHandle, field: DeformationField, t_grid, k: int = 1,
                 gap_tol: float = DEFAULT_GAP_TOL, tol: float = DEFAULT_TOL, threshold: float = OVERLAP_THRESHOLD,
                 start: ClusterState | None = None, align: bool = True, predict: bool = True) -> TrackedBranch:
    """Follow the cluster containing the k-th positive eigenvalue along t -> mesh + t X.

    Samples are visited outward from t = 0 in each direction; every step is
    solved near the previous cluster mean (moved by the first-order
    prediction of the exact discrete slopes when ``predict``) and matched to
    the previous vectors. Degenerate clusters are first aligned with
    ``aligned_basis`` using the smallest nonzero |t| of the grid as probe.
    """
    ts = np.unique(np.concatenate([np.asarray(t_grid, float).ravel(), [0.0]]))
    if start is None:
        start, cluster, _ = base_cluster(handle, k, gap_tol, tol)
    else:
        cluster = (k, k + start.size - 1)
    nonzero = ts[ts != 0]
    if align and start.size > 1 and len(nonzero):
        start = aligned_basis(start, field, float(nonzero[np.argmin(np.abs(nonzero))]), tol)
    states = {0.0: start}
    overlaps = {0.0: 1.0}
    disp = field.volumetric_displacement
    for side in (ts[ts > 0], ts[ts < 0][::-1]):
        prev = start
        for t in side:
            h = deformed_handle(start.handle, field, float(t))
            shift = prev.mean
            if predict:
                shift += float(np.mean(branch_slopes(prev, disp))) * (float(t) - prev.t)
            prev, cos, _ = solve_cluster(h, prev, float(t), tol, threshold, shift)
            states[float(t)] = prev
            overlaps[float(t)] = cos
    order = [float(t) for t in ts]
    return TrackedBranch(ts, np.array([states[t].eigenvalues for t in order]), np.array([overlaps[t] for t in order]),
                         cluster, [states[t] for t in order], field.description)

