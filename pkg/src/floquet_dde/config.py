"""Run configuration: a nested JSON document validated with pydantic.

Unknown keys are rejected at every level so that a typo cannot silently
fall back to a default.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .base_flow import GOLDEN_GAMMA, TelegraphDriver, TelegraphPoint, TorusDriver, TorusPoint
from .delay_cocycle import DelayCocycle
from .state_space import GridSpec, StateVector


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FlowConfig(_Strict):
    type: Literal["torus", "telegraph"] = "torus"
    gamma: float = GOLDEN_GAMMA
    angle: float = 0.0
    seed: int = Field(0, ge=0)
    hold_rate: float = Field(1.0, gt=0)
    # stationary weights of the telegraph states (uniform when omitted)
    states: Optional[list[float]] = None


class CoeffConfig(_Strict):
    a0: float = 0.0
    a1: float = 0.0
    b0: float = 1.0
    b1: float = 0.0
    a_table: Optional[list[float]] = None
    b_table: Optional[list[float]] = None


class GridConfig(_Strict):
    m: int = Field(64, ge=8)
    p: float = Field(2.0, gt=1.0)


class RunSection(_Strict):
    horizon: int = Field(200, ge=10)
    tol: float = Field(1e-10, gt=0)
    max_pullback: int = Field(400, ge=4)
    ensemble_nodes: int = Field(512, ge=1)
    seed: int = Field(0, ge=0)


class OutputConfig(_Strict):
    dir: str = "out"
    formats: list[Literal["json", "csv"]] = ["json", "csv"]


class InitialConfig(_Strict):
    head: float = 1.0
    # a constant or one sample per grid node
    tail: Union[float, list[float]] = 0.0


class SweepConfig(_Strict):
    axis: Literal["grid_m", "horizon", "coefficient"] = "grid_m"
    values: list[float] = [32, 64, 128]
    coeff_name: Optional[Literal["a0", "a1", "b0", "b1"]] = None


class VerifyConfig(_Strict):
    inject_fault: bool = False
    samples: int = Field(20, ge=1)


class RunConfig(_Strict):
    flow: FlowConfig = FlowConfig()
    coeffs: CoeffConfig = CoeffConfig()
    grid: GridConfig = GridConfig()
    run: RunSection = RunSection()
    output: OutputConfig = OutputConfig()
    initial: InitialConfig = InitialConfig()
    sweep: SweepConfig = SweepConfig()
    verify: VerifyConfig = VerifyConfig()

    @model_validator(mode="after")
    def _check(self):
        c = self.coeffs
        if self.flow.type == "torus":
            if c.a_table is not None or c.b_table is not None:
                raise ValueError("coefficient tables are only used by the telegraph flow")
            if c.b0 < abs(c.b1):
                raise ValueError(
                    f"coefficient b must be nonnegative everywhere: b0 = {c.b0} < |b1| = {abs(c.b1)}")
        else:
            if c.a_table is None or c.b_table is None:
                raise ValueError("telegraph flow needs coeffs.a_table and coeffs.b_table")
            if len(c.a_table) == 0 or len(c.a_table) != len(c.b_table):
                raise ValueError("coeffs.a_table and coeffs.b_table must be nonempty and of equal length")
            if any(b < 0 for b in c.b_table):
                raise ValueError(f"coefficient b must be nonnegative everywhere: b_table = {c.b_table}")
            w = self.flow.states
            if w is not None and (len(w) != len(c.a_table) or any(x < 0 for x in w) or sum(w) <= 0):
                raise ValueError("flow.states must hold one nonnegative weight per telegraph state")
        tail = self.initial.tail
        if isinstance(tail, list) and len(tail) != self.grid.m + 1:
            raise ValueError(f"initial.tail needs grid.m + 1 = {self.grid.m + 1} samples, got {len(tail)}")
        if self.sweep.axis == "coefficient" and self.sweep.coeff_name is None:
            raise ValueError("sweep.coeff_name is required when sweep.axis is 'coefficient'")
        return self

    @field_validator("output")
    @classmethod
    def _formats(cls, v):
        if len(set(v.formats)) != len(v.formats):
            raise ValueError("output.formats has duplicates")
        return v


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    return RunConfig.model_validate(json.loads(text))


def config_dict(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json")


def build_grid(cfg: RunConfig) -> GridSpec:
    return GridSpec(cfg.grid.m, cfg.grid.p)


def build_driver(cfg: RunConfig):
    c = cfg.coeffs
    if cfg.flow.type == "torus":
        return TorusDriver(c.a0, c.a1, c.b0, c.b1, cfg.flow.gamma)
    return TelegraphDriver(tuple(c.a_table), tuple(c.b_table), tuple(cfg.flow.states or ()),
                           cfg.flow.hold_rate, 1.0 / cfg.grid.m)


def build_start(cfg: RunConfig):
    if cfg.flow.type == "torus":
        return TorusPoint(cfg.flow.angle)
    return TelegraphPoint(0, cfg.flow.seed)


def build_cocycle(cfg: RunConfig, cls=DelayCocycle):
    return cls(build_driver(cfg), build_grid(cfg))


def build_initial(cfg: RunConfig) -> StateVector:
    tail = cfg.initial.tail
    if isinstance(tail, list):
        return StateVector(cfg.initial.head, np.asarray(tail, dtype=float))
    return StateVector.constant(cfg.initial.head, tail, build_grid(cfg))
