"""Lagrangian boundary conditions as linear constraints on boundary periods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InconsistentLagrangian


@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    """Constraint matrix F (l x 2l) acting on the period vector (alpha_1..alpha_l, beta_1..beta_l).

    The admissible boundary classes are the null space of F. The condition is
    self-adjoint exactly when that null space is isotropic for the
    sesquilinear extension of the intersection form, i.e. F Omega F^H = 0
    with rank F = l (for real F this is F Omega F^T = 0).
    """

    F: np.ndarray
    preset_name: str = "custom"

    def __post_init__(self):
        f = np.atleast_2d(np.array(self.F, dtype=complex))
        if f.size == 0:
            f = f.reshape(0, 0) if f.shape[1] == 0 else f.reshape(0, f.shape[1])
        if np.abs(f.imag).max(initial=0.0) == 0.0:
            f = f.real.copy()
        f.setflags(write=False)
        object.__setattr__(self, "F", f)

    @classmethod
    def zero_flux(cls, ell: int) -> "LagrangianSpec":
        """Vanishing circulation along every alpha cycle (boundaries of the cut surfaces)."""
        return cls(np.hstack([np.eye(ell), np.zeros((ell, ell))]).reshape(ell, 2 * ell), "zero_flux")

    @classmethod
    def custom(cls, F) -> "LagrangianSpec":
        return cls(F, "custom")

    @property
    def ell(self) -> int:
        return self.F.shape[1] // 2

    @property
    def reality_flag(self) -> bool:
        return not np.iscomplexobj(self.F)

    def admissible_classes(self, tol: float = 1e-10) -> np.ndarray:
        """Orthonormal basis (2l x r) of the null space of F."""
        n = self.F.shape[1]
        if n == 0:
            return np.zeros((0, 0))
        if self.F.shape[0] == 0:
            return np.eye(n)
        _, s, vh = np.linalg.svd(self.F)
        rank = int(np.sum(s > tol * max(s.max(initial=0.0), 1.0)))
        null = vh[rank:].conj().T
        return null.real.copy() if self.reality_flag else null

    def isotropy_defect(self, intersection_matrix: np.ndarray) -> float:
        """max |n_i^H Omega n_j| over an orthonormal basis of the admissible classes."""
        n = self.admissible_classes()
        if n.size == 0:
            return 0.0
        return float(np.abs(n.conj().T @ np.asarray(intersection_matrix, float) @ n).max())

    def validate(self, intersection_matrix: np.ndarray, tol: float = 1e-10) -> None:
        """Raise InconsistentLagrangian unless F has rank l and is isotropic."""
        q = np.asarray(intersection_matrix)
        ell = q.shape[0] // 2
        if self.F.shape != (ell, 2 * ell):
            raise InconsistentLagrangian(f"constraint matrix must be {ell} x {2 * ell}, got {self.F.shape}")
        if ell == 0:
            return
        rank = np.linalg.matrix_rank(self.F, tol=tol * max(1.0, np.abs(self.F).max()))
        if rank != ell:
            raise InconsistentLagrangian(f"constraint matrix has rank {rank}, expected {ell}")
        iso = np.abs(self.F @ q @ self.F.conj().T).max()
        if iso > tol * max(1.0, np.abs(self.F).max() ** 2):
            raise InconsistentLagrangian(f"constraint rows are not isotropic (max |F Omega F^H| = {iso:.3e})")

    def to_dict(self) -> dict:
        f = self.F
        if self.reality_flag:
            return {"preset": self.preset_name, "F": f.tolist()}
        return {"preset": self.preset_name, "F_real": f.real.tolist(), "F_imag": f.imag.tolist()}
