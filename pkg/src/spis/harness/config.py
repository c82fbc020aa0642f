"""Experiment configuration: a TOML file validated into an ExperimentConfig.

Grammar (all keys at top level unless noted)::

    scenario = "gamma_tail"      # row label
    seed = 20240101              # mandatory, 0 <= seed < 2**64
    workers = 1                  # optional, overridable from the CLI
    methods = ["SPIS", "BGL"]    # subset of SPIS, Naive, CMC, OET, BGL
    reference = "BGL"            # optional; variance_reduction = Var(ref)/Var(method)
    n = [50, 100]
    N = [1000, 100000]
    output = "gamma_tail.csv"    # optional default for --out

    [model]                      # family + parameters, see model_from_spec
    family = "exponential"
    rate = 1.0

    [target]
    type = "tail"                # density | tail | overshoot
    points = [[1.0], [1.5]]      # density: one row label per point
    x0 = 1.5                     # overshoot threshold (d = 1)
    [target.set]                 # tail: see tail_set_from_spec
    kind = "full_orthant"
    x0 = [1.5]

    [is]                         # optional IS overrides: alpha, a, p, xi
    alpha = 2.0
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..models import CumulantModel, model_from_spec
from ..tail_sets import FullOrthant, SignedCombination, TailSet, tail_set_from_spec

__all__ = [
    "METHODS",
    "ConfigError",
    "ExperimentConfig",
    "ISOverrides",
    "TargetConfig",
    "load_config",
    "parse_config",
]

Method = Literal["SPIS", "Naive", "CMC", "OET", "BGL"]
METHODS = ("SPIS", "Naive", "CMC", "OET", "BGL")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message lists field paths."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ISOverrides(_Strict):
    alpha: Optional[float] = None
    a: Optional[float] = Field(None, gt=0)
    p: Optional[float] = Field(None, gt=0, lt=1)
    xi: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _one_core_rule(self):
        if self.p is not None and self.xi is not None:
            raise ValueError("give either p or xi, not both")
        return self

    def kwargs(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class TargetConfig(_Strict):
    type: Literal["density", "tail", "overshoot"]
    points: Optional[list[list[float]]] = None
    set: Optional[dict[str, Any]] = None
    x0: Optional[float] = None

    @field_validator("points", mode="before")
    @classmethod
    def _scalar_points(cls, v):
        # allow points = [1.0, 1.5] for one-dimensional models
        if isinstance(v, list):
            return [p if isinstance(p, list) else [p] for p in v]
        return v

    @model_validator(mode="after")
    def _fields_for_type(self):
        need = {"density": "points", "tail": "set", "overshoot": "x0"}[self.type]
        if getattr(self, need) is None:
            raise ValueError(f"target type {self.type!r} needs '{need}'")
        if self.type == "density" and not self.points:
            raise ValueError("density target needs at least one point")
        return self


class ExperimentConfig(_Strict):
    scenario: str = Field(min_length=1)
    seed: int = Field(ge=0, lt=2**64)
    workers: int = Field(1, ge=1)
    methods: list[Method] = Field(min_length=1)
    reference: Optional[Method] = None
    n: list[int] = Field(min_length=1)
    N: list[int] = Field(min_length=1)
    model: dict[str, Any]
    target: TargetConfig
    is_: ISOverrides = Field(default_factory=ISOverrides, alias="is")
    antithetic: bool = False
    bgl_freeze: float = Field(2.0, gt=1)
    output: Optional[str] = None

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("n")
    @classmethod
    def _positive_n(cls, v):
        if any(k < 1 for k in v):
            raise ValueError("every n must be >= 1")
        return v

    @field_validator("N")
    @classmethod
    def _enough_draws(cls, v):
        if any(k < 2 for k in v):
            raise ValueError("every N must be >= 2")
        return v

    @field_validator("methods")
    @classmethod
    def _unique(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("methods must not repeat")
        return v

    @field_validator("model")
    @classmethod
    def _model_parses(cls, v):
        _checked(model_from_spec, v)
        return v

    @model_validator(mode="after")
    def _admissible(self):
        model = self.build_model()
        if self.target.type == "tail":
            _checked(self.build_target, model)
        kind = self.target.type
        if kind == "density":
            for i, point in enumerate(self.target.points):
                if len(point) != model.dim:
                    raise ValueError(f"target.points[{i}] has length {len(point)}, model dimension is {model.dim}")
        elif kind == "tail":
            tail_set = self.build_target(model)
            d = tail_set.terms[0].tail_set.x0.size if isinstance(tail_set, SignedCombination) else tail_set.x0.size
            if d != model.dim:
                raise ValueError(f"target.set has dimension {d}, model dimension is {model.dim}")
        elif model.dim != 1:
            raise ValueError("overshoot targets need a one-dimensional model")

        allowed = {
            "density": {"SPIS", "CMC"},
            "tail": {"SPIS", "Naive", "OET", "BGL"},
            "overshoot": {"SPIS"},
        }[kind]
        for m in self.methods:
            if m not in allowed:
                raise ValueError(f"method {m} is not admissible for a {kind} target")
        if "CMC" in self.methods and model.dim != 1:
            raise ValueError("CMC needs a one-dimensional model")
        if "BGL" in self.methods:
            if model.dim != 1 or not isinstance(self.build_target(model), FullOrthant):
                raise ValueError("BGL needs a one-dimensional full-orthant tail")
        if self.reference is not None and self.reference not in self.methods:
            raise ValueError(f"reference {self.reference} is not among the methods")
        return self

    def build_model(self) -> CumulantModel:
        return model_from_spec(self.model)

    def build_target(self, model: CumulantModel | None = None) -> TailSet:
        if self.target.type != "tail":
            raise ValueError("only tail targets carry a set")
        return tail_set_from_spec(self.target.set, model or self.build_model())


def _checked(fn, *args):
    # pydantic only reports ValueError; surface malformed specs the same way
    try:
        return fn(*args)
    except (KeyError, TypeError, RuntimeError) as err:
        raise ValueError(f"{type(err).__name__}: {err}") from None


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<config>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from None
    return parse_config(data)
