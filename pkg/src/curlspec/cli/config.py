"""Run configuration: one JSON document validated with pydantic."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainConfig(_Strict):
    """Generated domain (``generator`` plus parameters) or a mesh file."""

    generator: Literal["ball", "torus", "handlebody"] | None = "ball"
    mesh_file: str | None = None
    refinement: int = Field(2, ge=0, le=6)
    radius: float = Field(1.0, gt=0)
    major_radius: float = Field(2.0, gt=0)
    minor_radius: float = Field(0.5, gt=0)
    n_phi: int | None = Field(None, ge=3)
    genus: int = Field(1, ge=0, le=2)

    @model_validator(mode="after")
    def _one_source(self):
        if self.mesh_file is not None:
            self.generator = None
        elif self.generator is None:
            raise ValueError("either generator or mesh_file must be given")
        if self.generator == "torus" and self.minor_radius >= self.major_radius:
            raise ValueError("minor_radius must be smaller than major_radius")
        return self


class LagrangianConfig(_Strict):
    """Boundary condition: the zero-flux preset or a custom constraint matrix."""

    preset: Literal["zero_flux", "custom"] = "zero_flux"
    F: list[list[float]] | None = None
    F_imag: list[list[float]] | None = None
    check: bool = True

    @model_validator(mode="after")
    def _matrix(self):
        if self.preset == "custom" and self.F is None:
            raise ValueError("custom preset needs the matrix F")
        if self.F_imag is not None and self.F is None:
            raise ValueError("F_imag given without F")
        return self


class SolverConfig(_Strict):
    k: int = Field(6, ge=1)
    shift: float | None = None
    tol: float = Field(1e-10, gt=0)
    gap_tol: float = Field(1e-3, gt=0)
    write_fields: bool = True


class FieldConfig(_Strict):
    """One deformation field."""

    kind: Literal["zero", "translation", "dilation", "harmonic", "fourier", "random"] = "dilation"
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    degree: int = Field(2, ge=0)
    order: int = 0
    n_long: int = Field(0, ge=0)
    n_mer: int = 0
    trig: Literal["cos", "sin"] = "cos"
    l_max: int = Field(4, ge=1)
    amplitude: float = Field(1.0, gt=0)


class HadamardConfig(_Strict):
    k: int = Field(1, ge=1)
    fields: list[FieldConfig] = Field(default_factory=lambda: [FieldConfig()])
    delta: float | None = Field(None, gt=0)
    sweep: list[float] = Field(default_factory=lambda: [2.0, 1.0, 0.5, 0.25], min_length=3)


class TrackConfig(_Strict):
    k: int = Field(1, ge=1)
    field: FieldConfig = Field(default_factory=FieldConfig)
    t_min: float = 0.0
    t_max: float = 0.2
    n_steps: int = Field(10, ge=1)
    threshold: float = Field(0.8, gt=0, le=1)

    @model_validator(mode="after")
    def _range(self):
        if not self.t_min <= 0.0 <= self.t_max or self.t_min == self.t_max:
            raise ValueError("the t range must contain 0 and have positive length")
        return self


class SplitConfig(_Strict):
    amplitude: float = Field(0.02, ge=0)
    trials: int = Field(50, ge=1)
    l_min: int = Field(1, ge=1)
    l_max: int = Field(4, ge=1)
    coarse_refinement: int = Field(1, ge=0)
    fine_refinement: int = Field(2, ge=1)
    safety_factor: float = Field(3.0, gt=0)

    @model_validator(mode="after")
    def _levels(self):
        if self.fine_refinement <= self.coarse_refinement:
            raise ValueError("fine_refinement must exceed coarse_refinement")
        if self.l_max < self.l_min:
            raise ValueError("l_max must be at least l_min")
        return self


class OptimizeConfig(_Strict):
    k: int = Field(1, ge=1)
    family: Literal["harmonic", "fourier", "dilation", "rigid"] = "harmonic"
    l_min: int = Field(2, ge=1)
    l_max: int = Field(2, ge=1)
    n_long_max: int = Field(2, ge=0)
    n_mer_max: int = Field(1, ge=0)
    include_dilation: bool = False
    direction: Literal["minimize", "maximize"] = "minimize"
    max_iters: int = Field(10, ge=0)
    grad_tol: float = Field(1e-6, gt=0)
    max_displacement: float = Field(0.05, gt=0)
    resume_from: str | None = None


class RunConfig(_Strict):
    """Full configuration of one CLI run; embedded verbatim in every output."""

    domain: DomainConfig = Field(default_factory=DomainConfig)
    lagrangian: LagrangianConfig = Field(default_factory=LagrangianConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    hadamard: HadamardConfig = Field(default_factory=HadamardConfig)
    track: TrackConfig = Field(default_factory=TrackConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    optimize: OptimizeConfig = Field(default_factory=OptimizeConfig)
    seed: int = Field(0, ge=0, lt=2 ** 64)


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> RunConfig:
    """Validate a config dict; errors name the offending field."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_describe(err)) from None


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{p}: invalid JSON at line {err.lineno}: {err.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: the config must be a JSON object")
    return parse_config(data)
