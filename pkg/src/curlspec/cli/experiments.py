"""Seeded splitting experiment for the ball's lowest eigenvalue cluster."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..complex.cochain import build_complex
from ..errors import CurlSpecError, TetInversion
from ..mesh.deform import deform, random_boundary_field
from ..mesh.generators import generate_ball
from ..spectrum.constraints import constraint_space_for_mesh
from ..spectrum.solver import DEFAULT_TOL, DEGENERACY_TOL, lowest_positive


@dataclass(frozen=True, eq=False)
class SplitStatistics:
    """Per-trial gaps of the perturbed triple and the resolved-split fraction.

    A trial splits when both gaps on the fine mesh exceed
    ``safety_factor`` times their Richardson error estimate
    |g_fine - g_coarse| / 3 from the two levels, and exceed the solver
    resolution DEGENERACY_TOL * lambda.
    """

    trials: list
    amplitude: float
    n_trials: int
    n_valid: int
    n_split: int
    n_inverted: int
    n_failed: int
    base_eigenvalues: dict
    extra: dict = field(default_factory=dict)

    @property
    def split_fraction(self) -> float:
        return self.n_split / self.n_valid if self.n_valid else float("nan")

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "n_trials": self.n_trials, "n_valid": self.n_valid,
                "n_split": self.n_split, "n_inverted": self.n_inverted, "n_failed": self.n_failed,
                "split_fraction": self.split_fraction, "base_eigenvalues": self.base_eigenvalues,
                "trials": self.trials, **self.extra}


def _trial(index, seed, levels, amplitude, radius, l_min, l_max, safety, tol) -> dict:
    gaps, lams = {}, {}
    for ref, (mesh, handle) in levels.items():
        # the same child seed on both levels draws the same harmonic coefficients
        rng = np.random.default_rng(seed)
        try:
            f = random_boundary_field(mesh, rng, l_max=l_max, l_min=l_min, amplitude=amplitude * radius)
            h = handle if amplitude == 0 else handle.rebind(build_complex(deform(mesh, f, 1.0)))
            lam = lowest_positive(h, 3, tol=tol).eigenvalues[:3]
        except TetInversion as err:
            return {"trial": index, "status": "inverted", "level": ref, "message": str(err)}
        except CurlSpecError as err:
            return {"trial": index, "status": "failed", "level": ref, "message": str(err)}
        lams[ref] = lam
        gaps[ref] = np.diff(lam)
    coarse, fine = sorted(levels)
    est = np.abs(gaps[fine] - gaps[coarse]) / 3.0
    threshold = np.maximum(safety * est, DEGENERACY_TOL * lams[fine][-1])
    split = bool(np.all(gaps[fine] > threshold))
    return {"trial": index, "status": "ok", "eigenvalues_coarse": lams[coarse].tolist(),
            "eigenvalues_fine": lams[fine].tolist(), "gaps_coarse": gaps[coarse].tolist(),
            "gaps_fine": gaps[fine].tolist(), "threshold": threshold.tolist(), "split": split}


def split_experiment(amplitude: float = 0.02, trials: int = 50, seed: int = 0, radius: float = 1.0,
                     refinements=(1, 2), l_min: int = 1, l_max: int = 4, safety_factor: float = 3.0,
                     tol: float = DEFAULT_TOL, workers: int = 1) -> SplitStatistics:
    """Perturb the unit ball by random harmonic normal speeds and count resolved splittings.

    Trial i uses child i of ``numpy.random.SeedSequence(seed)``; the speed is
    scaled to max |f| = amplitude * radius. Trials whose meshes invert are
    excluded and counted. Trials are independent and run on ``workers``
    threads; results do not depend on the worker count.
    """
    levels = {}
    base = {}
    for ref in sorted(refinements):
        mesh = generate_ball(radius, ref)
        h = constraint_space_for_mesh(mesh)
        levels[ref] = (mesh, h)
        base[str(ref)] = lowest_positive(h, 3, tol=tol).eigenvalues[:3].tolist()
    children = np.random.SeedSequence(seed).spawn(trials)
    args = [(i, children[i], levels, amplitude, radius, l_min, l_max, safety_factor, tol) for i in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(lambda a: _trial(*a), args))
    else:
        rows = [_trial(*a) for a in args]
    ok = [r for r in rows if r["status"] == "ok"]
    return SplitStatistics(rows, amplitude, trials, len(ok), sum(r["split"] for r in ok),
                           sum(r["status"] == "inverted" for r in rows), sum(r["status"] == "failed" for r in rows),
                           base, {"seed": seed, "refinements": sorted(refinements), "l_min": l_min, "l_max": l_max,
                                  "safety_factor": safety_factor})
