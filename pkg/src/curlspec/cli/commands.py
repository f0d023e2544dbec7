"""Subcommand implementations. Each returns the payload written to results.json."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..complex.homology import homology_basis
from ..errors import ConfigError
from ..hadamard.fdcheck import fd_check
from ..hadamard.tracking import track_family
from ..mesh.deform import (dilation_field, random_boundary_field, spherical_harmonic_field, torus_fourier_field,
                           translation_field, zero_field)
from ..mesh.generators import generate_ball, generate_handlebody, generate_solid_torus
from ..mesh.io import read_mesh, write_tmesh
from ..shapeopt.family import (ShapeFamily, dilation_family, rigid_family, spherical_harmonic_family,
                               torus_fourier_family)
from ..shapeopt.functional import ShapeProblem
from ..shapeopt.optimize import optimize
from ..spectrum.constraints import constraint_space_for_mesh
from ..spectrum.lagrangian import LagrangianSpec
from ..spectrum.solver import check_selfadjointness, harmonic_fields, lowest_positive, solve_spectrum
from .config import DomainConfig, FieldConfig, LagrangianConfig, RunConfig
from .experiments import split_experiment
from .output import write_vtk


def build_mesh(cfg: DomainConfig):
    if cfg.mesh_file is not None:
        return read_mesh(cfg.mesh_file)
    if cfg.generator == "ball":
        return generate_ball(cfg.radius, cfg.refinement)
    if cfg.generator == "torus":
        return generate_solid_torus(cfg.major_radius, cfg.minor_radius, cfg.refinement, cfg.n_phi)
    return generate_handlebody(cfg.genus, cfg.refinement)


def build_lagrangian(cfg: LagrangianConfig, mesh) -> LagrangianSpec | None:
    if cfg.preset == "zero_flux":
        return None
    f = np.asarray(cfg.F, dtype=float)
    if cfg.F_imag is not None:
        fi = np.asarray(cfg.F_imag, dtype=float)
        if fi.shape != f.shape:
            raise ConfigError("lagrangian.F_imag: shape must match lagrangian.F")
        f = f + 1j * fi
    genus = mesh.topology.boundary_genus()
    if f.ndim != 2 or f.shape != (genus, 2 * genus):
        raise ConfigError(f"lagrangian.F: expected a {genus} x {2 * genus} matrix for this domain")
    return LagrangianSpec.custom(f)


def build_handle(cfg: RunConfig, mesh=None):
    mesh = build_mesh(cfg.domain) if mesh is None else mesh
    return constraint_space_for_mesh(mesh, build_lagrangian(cfg.lagrangian, mesh), check=cfg.lagrangian.check)


def build_field(mesh, cfg: FieldConfig, domain: DomainConfig, seed: int = 0):
    if cfg.kind == "zero":
        return zero_field(mesh)
    if cfg.kind == "translation":
        return translation_field(mesh, cfg.direction)
    if cfg.kind == "dilation":
        return dilation_field(mesh)
    if cfg.kind == "harmonic":
        if abs(cfg.order) > cfg.degree:
            raise ConfigError("field.order: need |order| <= degree")
        return spherical_harmonic_field(mesh, cfg.degree, cfg.order).scaled(cfg.amplitude)
    if cfg.kind == "fourier":
        return torus_fourier_field(mesh, domain.major_radius, cfg.n_long, cfg.n_mer, cfg.trig).scaled(cfg.amplitude)
    return random_boundary_field(mesh, np.random.default_rng(seed), l_max=cfg.l_max, amplitude=cfg.amplitude)


def workers_for(sequential: bool, n: int) -> int:
    return 1 if sequential else max(1, min(n, os.cpu_count() or 1))


def cmd_mesh_info(cfg: RunConfig, out: Path, sequential: bool) -> dict:
    mesh = build_mesh(cfg.domain)
    topo = mesh.topology
    basis = homology_basis(mesh)
    return {"domain": mesh.domain_name, "n_vertices": mesh.n_vertices, "n_edges": topo.n_edges,
            "n_faces": topo.n_faces, "n_tets": mesh.n_tets, "volume": mesh.volume(),
            "boundary_area": mesh.boundary_area(), "diameter": mesh.diameter(),
            "euler_characteristic": topo.euler_characteristic(), "boundary_components": len(topo.boundary_components()),
            "boundary_genus": topo.boundary_genus(), "homology_source": basis.source,
            "intersection_matrix": basis.intersection_matrix.tolist(), "quality": mesh.quality()}


def cmd_solve(cfg: RunConfig, out: Path, sequential: bool) -> dict:
    h = build_handle(cfg)
    s = cfg.solver
    if s.shift is None:
        res = lowest_positive(h, s.k, tol=s.tol, gap_tol=s.gap_tol)
    else:
        res = solve_spectrum(h, s.k, s.shift, tol=s.tol, gap_tol=s.gap_tol)
    harm = harmonic_fields(h.complex, h.basis, tol=s.tol)
    payload = {"result": res.to_dict(),
               "harmonic_dimension": harm.dimension,
               "flux_condition_number": harm.condition_number,
               "selfadjointness": check_selfadjointness(h, res),
               "lagrangian": h.lagrangian.to_dict(),
               "mesh": {"domain": h.complex.mesh.domain_name, "n_tets": h.complex.mesh.n_tets,
                        "quality": h.complex.mesh.quality()}}
    if s.write_fields:
        names = {f"u_{i + 1}": res.eigenvectors[:, i] for i in range(res.k)}
        write_vtk(h.complex, out / "fields.vtk", names)
    return payload


def cmd_hadamard_check(cfg: RunConfig, out: Path, sequential: bool) -> dict:
    h = build_handle(cfg)
    hc = cfg.hadamard
    reports = []
    for i, fc in enumerate(hc.fields):
        f = build_field(h.complex.mesh, fc, cfg.domain, cfg.seed + i)
        rep = fd_check(h, f, k=hc.k, delta=hc.delta, sweep=tuple(hc.sweep), gap_tol=cfg.solver.gap_tol,
                       tol=cfg.solver.tol, workers=workers_for(sequential, len(hc.sweep)))
        reports.append(rep.to_dict())
    return {"reports": reports}


def cmd_track(cfg: RunConfig, out: Path, sequential: bool) -> dict:
    h = build_handle(cfg)
    tc = cfg.track
    f = build_field(h.complex.mesh, tc.field, cfg.domain, cfg.seed)
    grid = np.linspace(tc.t_min, tc.t_max, tc.n_steps + 1)
    br = track_family(h, f, grid, k=tc.k, gap_tol=cfg.solver.gap_tol, tol=cfg.solver.tol, threshold=tc.threshold)
    br.write_csv(out / "branches.csv")
    return {"branches": br.to_dict(), "pairwise_gaps": br.pairwise_gaps().tolist()}


def cmd_split_experiment(cfg: RunConfig, out: Path, sequential: bool) -> dict:
    sc = cfg.split
    if cfg.domain.generator != "ball":
        raise ConfigError("domain.generator: the split experiment runs on the ball")
    stats = split_experiment(sc.amplitude, sc.trials, cfg.seed, cfg.domain.radius,
                             (sc.coarse_refinement, sc.fine_refinement), sc.l_min, sc.l_max, sc.safety_factor,
                             cfg.solver.tol, workers_for(sequential, sc.trials))
    return {"statistics": stats.to_dict()}


def _family(cfg: RunConfig, mesh) -> ShapeFamily:
    oc = cfg.optimize
    if oc.family == "harmonic":
        return spherical_harmonic_family(mesh, oc.l_max, oc.l_min, oc.include_dilation)
    if oc.family == "fourier":
        return torus_fourier_family(mesh, cfg.domain.major_radius, oc.n_long_max, oc.n_mer_max, oc.include_dilation)
    if oc.family == "rigid":
        return rigid_family(mesh)
    return dilation_family(mesh)


def cmd_optimize(cfg: RunConfig, out: Path, sequential: bool) -> dict:
    oc = cfg.optimize
    if oc.resume_from is not None:
        src = Path(oc.resume_from)
        if not (src / "final.tmesh").exists() or not (src / "family.npz").exists():
            raise ConfigError(f"optimize.resume_from: {src} lacks final.tmesh or family.npz")
        mesh = read_mesh(src / "final.tmesh")
        fam = ShapeFamily.from_saved(mesh, src / "family.npz")
    else:
        mesh = build_mesh(cfg.domain)
        fam = _family(cfg, mesh)
    h = build_handle(cfg, mesh)
    problem = ShapeProblem(fam, h.lagrangian, oc.k, cfg.solver.tol, cfg.solver.gap_tol, base_handle=h)
    res = optimize(problem, oc.direction, oc.max_iters, grad_tol=oc.grad_tol,
                   max_displacement=oc.max_displacement, workers=workers_for(sequential, fam.dimension))
    write_tmesh(res.mesh, out / "final.tmesh")
    # displacements stay valid on the final mesh (same connectivity), so a resume restarts at c = 0
    ShapeFamily(res.mesh, fam.fields, fam.names).save_fields(out / "family.npz")
    st = res.evaluation.state
    write_vtk(st.complex, out / "fields.vtk", {f"u_{res.evaluation.cluster[0] + j}": st.vectors[:, j]
                                               for j in range(st.size)})
    return {"optimization": res.to_dict(), "resumed_from": oc.resume_from}


COMMANDS = {"solve": cmd_solve, "hadamard-check": cmd_hadamard_check, "track": cmd_track,
            "split-experiment": cmd_split_experiment, "optimize": cmd_optimize, "mesh-info": cmd_mesh_info}
