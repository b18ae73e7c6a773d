"""Strict run configuration for the command-line interface.

Configs are JSON documents validated before any computation; unknown keys
are rejected.  ``RunConfig.model_validate(manifest["config"])`` reproduces
the validated config of any run.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .model import ModelSpec, PotentialPair, build_model
from .quadrature import QuadratureSpec

COMMANDS = ("constants", "fracop", "drift-profile", "check-invariance", "carre-gap", "c-star",
            "poisson", "poincare", "dms-certify", "rate", "simulate", "decay-fit")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, validate_assignment=True)


class ModelBlock(_Strict):
    d: int = 1
    alpha: float = 1.5
    u_family: Literal["quadratic", "quadratic_plus_bump"] = "quadratic"
    u_params: Dict[str, Union[float, List[float]]] = Field(default_factory=dict)
    phi_family: Literal["log_radial"] = "log_radial"
    phi_params: Dict[str, float] = Field(default_factory=lambda: {"beta": 1.5})

    def build(self) -> PotentialPair:
        return build_model(ModelSpec(d=self.d, alpha=self.alpha, u_family=self.u_family,
                                     u_params=dict(self.u_params), phi_family=self.phi_family,
                                     phi_params=dict(self.phi_params)))


class QuadratureBlock(_Strict):
    inner_split: float = 0.25
    outer_radius: float = 64.0
    nodes_inner: int = 24
    nodes_shell: int = 16
    nodes_angular: int = 32
    nodes_tail: int = 32
    tail_rule: Literal["power-law", "exponential-map"] = "power-law"
    rtol: float = 1e-3
    atol: float = 1e-12
    verify: bool = False

    def build(self) -> QuadratureSpec:
        return QuadratureSpec(**self.model_dump())


class SimulationBlock(_Strict):
    n_particles: int = 2000
    dt: float = 1e-3
    t_end: float = 50.0
    stride: int = 100
    initial: Literal["stationary", "point", "perturbed"] = "stationary"
    x0: List[float] = Field(default_factory=lambda: [0.0])
    v0: List[float] = Field(default_factory=lambda: [0.0])
    observables: List[str] = Field(default_factory=lambda: ["x", "v", "tanh_v"])
    burn_in_fraction: float = 0.1
    block_size: int = 250
    backend: Optional[Literal["cython", "python"]] = None
    ks_level: float = 0.01
    write_trajectories: bool = True


class DmsBlock(_Strict):
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    lam: float = 1.0
    lam_min: float = 0.01
    lam_max: float = 100.0
    optimize: bool = False
    n_models: int = 20
    n_max: int = 10
    n_vectors: int = 20
    t_max: float = 50.0
    n_times: int = 50
    slack: float = 1e-9
    n_entropy_vectors: int = 1000


class CommandBlock(_Strict):
    """Per-command knobs that do not belong to a model-level block."""

    op: Literal["frac-laplacian", "riesz-potential"] = "frac-laplacian"
    order: Optional[float] = None
    points: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    x: float = 0.7
    method: Literal["fk", "fd", "both"] = "both"
    n_paths: int = 100_000
    fk_dt: float = 1e-3
    grid_half_width: float = 8.0
    grid_nodes: int = 1601
    boundary: Literal["reflecting", "far-field-decay"] = "reflecting"
    budget: float = 5e-3
    gap_tol: float = 1e-3
    input: Optional[str] = None
    observable: str = "tanh_v"


class RunConfig(_Strict):
    command: Literal[COMMANDS]  # type: ignore[valid-type]
    model: ModelBlock = Field(default_factory=ModelBlock)
    quadrature: QuadratureBlock = Field(default_factory=QuadratureBlock)
    simulation: SimulationBlock = Field(default_factory=SimulationBlock)
    dms: DmsBlock = Field(default_factory=DmsBlock)
    args: CommandBlock = Field(default_factory=CommandBlock)
    seed: int = 0
    out: str = "out"
    workers: int = 1

    @field_validator("seed")
    @classmethod
    def _u64(cls, v):
        if not 0 <= v < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @field_validator("workers")
    @classmethod
    def _workers(cls, v):
        if v < 1:
            raise ValueError("workers must be >= 1")
        return v


def load_config(path) -> dict:
    """Raw JSON of a config file (validated later, after flag overrides)."""
    return json.loads(Path(path).read_text())


def deep_update(base: dict, patch: dict) -> dict:
    out = dict(base)
    for k, v in patch.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_update(out[k], v)
        else:
            out[k] = v
    return out
