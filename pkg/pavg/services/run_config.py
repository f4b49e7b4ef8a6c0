import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from pavg.enums.constants import (
    DEFAULT_MAX_ITERS,
    DEFAULT_SEED,
    DEFAULT_SOLVER_TOL,
    DEFAULT_TRIALS,
    SUBCOMMANDS,
)
from pavg.services.fields import FieldProbe, get_field
from pavg.services.helpers.artifacts import read_json
from pavg.services.operators import QuadraticProbe
from pavg.services.solver import Domain, TabulatedBoundary

Subcommand = Literal[
    "compute",
    "gamma-median",
    "verify-set",
    "amvp",
    "solve",
    "verify-walsh",
    "verify-trig",
    "quintic-check",
]


def env_seed() -> int:
    raw = os.getenv("PAVG_SEED", str(DEFAULT_SEED))
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"PAVG_SEED must be an integer, got '{raw}'") from None


def env_max_iters() -> int:
    raw = os.getenv("PAVG_MAX_ITERS", str(DEFAULT_MAX_ITERS))
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"PAVG_MAX_ITERS must be an integer, got '{raw}'") from None


class BoundaryTable(BaseModel):
    points: List[List[float]]
    values: List[float]

    @model_validator(mode="after")
    def _aligned(self) -> "BoundaryTable":
        if not self.values or len(self.points) != len(self.values):
            raise ValueError("boundary table needs one value per point")
        return self


class ProblemConfig(BaseModel):
    """Dirichlet problem file: domain, lattice, exponent and boundary data."""

    dimension: Literal[2, 4]
    domain: Domain
    epsilon: float = Field(gt=0)
    stencil: Literal["hexagon", "cell24"] = "hexagon"
    k: int = 2
    p: float = Field(default=2.0, gt=1)
    boundary: Union[float, str, BoundaryTable]
    reference: Optional[str] = None
    tol: float = Field(default=DEFAULT_SOLVER_TOL, gt=0)
    max_iters: int = Field(default_factory=env_max_iters, ge=1)
    sweep: Literal["jacobi", "gauss_seidel"] = "jacobi"

    @field_validator("domain", mode="before")
    @classmethod
    def _regions_shorthand(cls, value: Any) -> Any:
        if isinstance(value, list):
            return {"regions": value}
        if isinstance(value, dict) and "regions" not in value:
            return {"regions": [value]}
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "ProblemConfig":
        if self.domain.dimension != self.dimension:
            raise ValueError(f"domain is {self.domain.dimension}D but dimension is {self.dimension}")
        expected = "hexagon" if self.dimension == 2 else "cell24"
        if self.stencil != expected:
            raise ValueError(f"stencil '{self.stencil}' does not tessellate {self.dimension}D; use '{expected}'")
        return self

    def boundary_fn(self):
        if isinstance(self.boundary, BoundaryTable):
            return TabulatedBoundary(self.boundary.points, self.boundary.values)
        if isinstance(self.boundary, (int, float)):
            return get_field(f"constant:{self.boundary}").value
        return get_field(self.boundary).value

    def reference_fn(self):
        return None if self.reference is None else get_field(self.reference).value


class ProbeConfig(BaseModel):
    """Either an explicit quadratic probe or a named field anchored at a point."""

    base_point: Optional[List[float]] = None
    base_value: float = 0.0
    gradient: Optional[List[float]] = None
    hessian: Optional[List[List[float]]] = None
    field: Optional[str] = None
    point: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_kind(self) -> "ProbeConfig":
        quadratic = self.gradient is not None and self.hessian is not None
        named = self.field is not None
        if quadratic == named:
            raise ValueError("probe needs either gradient+hessian or field+point")
        if named and self.point is None:
            raise ValueError("a field probe needs a point")
        return self

    def to_probe(self):
        if self.field is not None:
            probe = FieldProbe(get_field(self.field), np.asarray(self.point, dtype=float))
            if not np.linalg.norm(probe.gradient) > 0:
                raise ValueError(f"field '{self.field}' has zero gradient at {self.point}")
            return probe
        base = self.base_point if self.base_point is not None else [0.0] * len(self.gradient)
        return QuadraticProbe(np.asarray(base), self.base_value, np.asarray(self.gradient), np.asarray(self.hessian))


class RunConfig(BaseModel):
    subcommand: Subcommand
    # compute / gamma-median
    values_path: Optional[str] = None
    values: Optional[List[float]] = None
    weights: Optional[List[float]] = None
    p: Optional[float] = Field(default=None, gt=1)
    p_sequence: List[float] = Field(default_factory=list)
    # verify-set / amvp
    set: Optional[str] = None
    trials: int = Field(default=DEFAULT_TRIALS, ge=2)
    exact: bool = False
    normalize: bool = False
    export_path: Optional[str] = None
    probe_path: Optional[str] = None
    probe: Optional[ProbeConfig] = None
    eps: float = Field(default=0.1, gt=0)
    halvings: int = Field(default=6, ge=2)
    # solve
    config_path: Optional[str] = None
    problem: Optional[ProblemConfig] = None
    # algebra
    degree: int = Field(default=8, ge=0)
    kmax: int = Field(default=12, ge=1)
    # shared
    tol: Optional[float] = Field(default=None, gt=0)
    seed: int = Field(default_factory=env_seed)
    out_path: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    @model_validator(mode="after")
    def _inputs_exist(self) -> "RunConfig":
        for name in ("values_path", "probe_path", "config_path"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ValueError(f"{name}: file not found: {path}")
        return self


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        location = ".".join(str(part) for part in err.get("loc", ())) or "config"
        parts.append(f"{location}: {err.get('msg')}")
    return "; ".join(parts)


def build_run_config(data: Dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ValueError("Run config must be a JSON object.")
    if data.get("subcommand") not in SUBCOMMANDS:
        raise ValueError(f"Unsupported subcommand '{data.get('subcommand')}'. Supported: {sorted(SUBCOMMANDS)}")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ValueError(f"Invalid run config: {_format_errors(exc)}") from exc


def load_problem(path: str) -> ProblemConfig:
    try:
        return ProblemConfig.model_validate(read_json(path))
    except ValidationError as exc:
        raise ValueError(f"Invalid problem file {path}: {_format_errors(exc)}") from exc


def load_probe(path: str) -> ProbeConfig:
    try:
        return ProbeConfig.model_validate(read_json(path))
    except ValidationError as exc:
        raise ValueError(f"Invalid probe file {path}: {_format_errors(exc)}") from exc
