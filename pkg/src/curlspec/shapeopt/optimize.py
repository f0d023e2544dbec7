"""Line-search optimization of |D|^(1/3) lambda_k over a shape family."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CurlSpecError
from ..mesh.io import write_tmesh
from .certificate import ExtremalityReport, extremality_certificate
from .functional import Evaluation, GradientResult, ShapeProblem

ARMIJO = 1e-4


def safe_gradient(grad: GradientResult, direction: str) -> np.ndarray:
    """Per-component derivative used for the step.

    For a simple eigenvalue this is the gradient itself. For a cluster it is
    the worst-case branch derivative for the goal: the largest one when
    minimizing and the smallest one when maximizing. The line search on the
    sorted eigenvalue decides whether a step is accepted.
    """
    if not grad.flagged:
        return grad.values.copy()
    return grad.upper.copy() if direction == "minimize" else grad.lower.copy()


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Outcome of ``optimize``: the accepted trajectory and the final state.

    ``trajectory`` rows hold iteration, c, value, eigenvalue, volume,
    gradient norm, step size and cluster size of every accepted iterate
    (iteration 0 is the start).
    """

    c: np.ndarray
    value: float
    trajectory: list
    stop_reason: str
    gradient: GradientResult
    evaluation: Evaluation
    certificate: ExtremalityReport | None
    direction: str
    names: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.trajectory) - 1

    @property
    def gradient_norm(self) -> float:
        return self.gradient.norm

    @property
    def mesh(self):
        return self.evaluation.mesh

    def is_monotone(self) -> bool:
        v = np.array([r["value"] for r in self.trajectory])
        d = np.diff(v)
        return bool(np.all(d <= 0) if self.direction == "minimize" else np.all(d >= 0))

    def to_dict(self) -> dict:
        return {"c": self.c.tolist(), "value": self.value, "stop_reason": self.stop_reason,
                "iterations": self.iterations, "direction": self.direction, "names": list(self.names),
                "gradient_norm": self.gradient_norm, "gradient": self.gradient.to_dict(),
                "trajectory": self.trajectory, "monotone": self.is_monotone(),
                "certificate": None if self.certificate is None else self.certificate.to_dict(),
                "label": "stationary within family" if self.stop_reason == "gradient" else "not stationary",
                **self.extra}

    def write_json(self, path) -> Path:
        p = Path(path)
        p.write_text(json.dumps(self.to_dict(), indent=2))
        return p

    def write_mesh(self, path) -> Path:
        return write_tmesh(self.mesh, path)


def _row(it, ev: Evaluation, grad: GradientResult, step: float) -> dict:
    return {"iteration": it, "c": ev.c.tolist(), "value": ev.value, "eigenvalue": ev.eigenvalue,
            "volume": ev.volume, "gradient_norm": grad.norm, "step": step, "cluster_size": ev.cluster_size}


def optimize(problem: ShapeProblem, direction: str = "minimize", max_iters: int = 20, c0=None,
             grad_tol: float = 1e-6, max_displacement: float = 0.05, min_step: float = 1e-8,
             max_halvings: int = 30, certificate: bool = True, workers: int = 1) -> OptimizationResult:
    """Backtracking gradient iteration on the normalized eigenvalue.

    Steps move along -g (or +g when maximizing) with g from
    ``safe_gradient``. The first trial step displaces no vertex by more
    than ``max_displacement`` times the mesh diameter; it is halved on
    TetInversion, on solver failure, or until the Armijo condition with
    factor 1e-4 holds. Stops when |g| < grad_tol * value ("gradient"), when
    the step falls below ``min_step`` times the first trial ("step"), or
    after ``max_iters`` accepted steps ("max_iters").
    """
    if direction not in ("minimize", "maximize"):
        raise ValueError("direction must be 'minimize' or 'maximize'")
    sign = 1.0 if direction == "minimize" else -1.0
    fam = problem.family
    c = np.zeros(fam.dimension) if c0 is None else np.asarray(c0, dtype=float).copy()
    ev = problem.evaluate(c)
    grad = problem.gradient(evaluation=ev, workers=workers)
    traj = [_row(0, ev, grad, 0.0)]
    stop = "max_iters"
    disp = fam.displacements
    diam = fam.base.diameter()
    halvings_total = 0
    for it in range(1, max_iters + 1):
        g = safe_gradient(grad, direction)
        if np.linalg.norm(g) < grad_tol * abs(ev.value):
            stop = "gradient"
            break
        d = -sign * g
        move = np.abs(np.tensordot(d, disp, axes=1)).max()
        alpha0 = max_displacement * diam / max(move, 1e-300)
        alpha = alpha0
        accepted = None
        for _ in range(max_halvings):
            try:
                trial = problem.evaluate(c + alpha * d)
            except CurlSpecError:                      # TetInversion or a failed solve
                alpha *= 0.5
                halvings_total += 1
                continue
            if sign * (trial.value - ev.value) <= -ARMIJO * alpha * float(g @ g):
                accepted = trial
                break
            alpha *= 0.5
            halvings_total += 1
            if alpha < min_step * alpha0:
                break
        if accepted is None:
            stop = "step"
            break
        c, ev = accepted.c, accepted
        grad = problem.gradient(evaluation=ev, workers=workers)
        traj.append(_row(it, ev, grad, alpha))
    else:
        g = safe_gradient(grad, direction)
        if np.linalg.norm(g) < grad_tol * abs(ev.value):
            stop = "gradient"
    cert = extremality_certificate(ev.state.complex, ev.state.vectors) if certificate else None
    return OptimizationResult(c, ev.value, traj, stop, grad, ev, cert, direction, fam.names,
                              {"halvings": halvings_total, "k": problem.k,
                               "family_dimension": fam.dimension})
