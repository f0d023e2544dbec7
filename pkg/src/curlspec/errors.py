"""Exception hierarchy shared by all curlspec modules."""

from __future__ import annotations


class CurlSpecError(Exception):
    """Base class for all library errors."""


class MeshError(CurlSpecError):
    """Malformed or unusable mesh input."""


class DegenerateTet(MeshError):
    """A tetrahedron has zero or negative volume."""

    def __init__(self, tet_index: int, volume: float):
        super().__init__(f"tetrahedron {tet_index} is degenerate (signed volume {volume:.3e})")
        self.tet_index = tet_index
        self.volume = volume


class NonManifoldBoundary(MeshError):
    """Boundary surface is not a closed 2-manifold."""


class TetInversion(MeshError):
    """A deformation turned at least one tetrahedron inside out."""

    def __init__(self, tet_indices, t: float):
        idx = list(map(int, tet_indices))
        super().__init__(f"{len(idx)} tetrahedra inverted at t={t:.4g} (first: {idx[:5]})")
        self.tet_indices = idx
        self.t = t


class MeshFormatError(MeshError):
    """Parse error in a mesh file."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class HarmonicExtensionError(CurlSpecError):
    """The boundary-to-volume Laplace solve did not converge."""

    def __init__(self, residual: float):
        super().__init__(f"harmonic extension failed, relative residual {residual:.3e}")
        self.residual = residual


class HomologyRankMismatch(CurlSpecError):
    """Computed homology rank disagrees with the Euler-characteristic genus."""

    def __init__(self, expected: int, found: int, detail: str = ""):
        msg = f"expected first Betti number {expected}, found {found}"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.expected = expected
        self.found = found


class InconsistentLagrangian(CurlSpecError):
    """Period-constraint matrix is rank deficient, non-isotropic or has the wrong shape."""


class FactorizationFailure(CurlSpecError):
    """Sparse factorization failed for every attempted shift."""

    def __init__(self, shifts):
        super().__init__(f"factorization failed at shifts {list(shifts)}")
        self.shifts = list(shifts)


class NoConvergence(CurlSpecError):
    """The iterative eigensolver stopped before converging."""

    def __init__(self, converged: int, requested: int, residuals=None):
        super().__init__(f"eigensolver converged {converged} of {requested} pairs")
        self.converged = converged
        self.requested = requested
        self.residuals = residuals


class DimensionMismatch(CurlSpecError):
    """Harmonic-field kernel dimension differs from the first Betti number."""

    def __init__(self, expected: int, found: int):
        super().__init__(f"harmonic kernel dimension {found}, expected {expected}")
        self.expected = expected
        self.found = found


class ZeroEigenvalue(CurlSpecError):
    """Requested normalized eigenvalue index hit the harmonic kernel."""


class BranchLoss(CurlSpecError):
    """Eigenvector overlap fell below threshold while tracking a branch."""

    def __init__(self, t: float, overlap: float):
        super().__init__(f"branch tracking lost at t={t:.4g} (overlap {overlap:.3f})")
        self.t = t
        self.overlap = overlap


class NotPSD(CurlSpecError):
    """Matrix has an eigenvalue below the positive-semidefinite tolerance."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


class ConfigError(CurlSpecError):
    """Invalid run configuration."""
