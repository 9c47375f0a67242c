"""JSON experiment configuration.  Unknown fields are rejected."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .errors import ConfigError

FORMAT_VERSION = "rwalk-config v1"

SamplerKind = Literal["uniform-mh", "is-mh", "mhlj"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GraphSection(_Strict):
    type: Literal["ring", "grid2d", "erdos_renyi", "watts_strogatz", "file"]
    n: Optional[int] = None
    rows: Optional[int] = None
    cols: Optional[int] = None
    k: Optional[int] = None
    p: Optional[float] = None
    beta: Optional[float] = None
    path: Optional[str] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _complete(self):
        need = {
            "ring": ("n",),
            "grid2d": ("rows", "cols"),
            "erdos_renyi": ("n", "p", "seed"),
            "watts_strogatz": ("n", "k", "beta", "seed"),
            "file": ("path",),
        }[self.type]
        missing = [f for f in need if getattr(self, f) is None]
        if missing:
            raise ValueError(f"graph type {self.type!r} requires {missing}")
        return self


class DataSection(_Strict):
    d: int
    seed: int
    homogeneous: bool = False
    sigma_sq: Optional[float] = None
    sigma_l_sq: Optional[float] = None
    sigma_h_sq: Optional[float] = None
    p_high: Optional[float] = None
    min_heavy: int = 0
    noise_sq: float = 1.0

    @model_validator(mode="after")
    def _complete(self):
        if self.homogeneous:
            if self.sigma_sq is None and self.sigma_l_sq is None:
                raise ValueError("homogeneous data requires sigma_sq")
        else:
            missing = [f for f in ("sigma_l_sq", "sigma_h_sq", "p_high") if getattr(self, f) is None]
            if missing:
                raise ValueError(f"heterogeneous data requires {missing}")
        return self


class AlgoSection(_Strict):
    sampler_kind: Union[SamplerKind, list[SamplerKind]]
    gamma: Union[float, Literal["auto-grid"]]
    T: int
    seed: int
    p_j: Optional[float] = None
    p_d: Optional[float] = None
    r: Optional[int] = None
    t_switch: Optional[int] = None
    literal_hops: bool = False
    include_self_in_jumps: bool = False
    # strong-convexity constant, only used for the step-cap diagnostic
    mu: Optional[float] = None

    @property
    def samplers(self) -> list[str]:
        return [self.sampler_kind] if isinstance(self.sampler_kind, str) else list(self.sampler_kind)

    @model_validator(mode="after")
    def _complete(self):
        if not self.samplers:
            raise ValueError("sampler_kind list is empty")
        if "mhlj" in self.samplers:
            missing = [f for f in ("p_j", "p_d", "r") if getattr(self, f) is None]
            if missing:
                raise ValueError(f"mhlj requires {missing}")
        return self


class OutputSection(_Strict):
    csv: str = "trace"
    log_every: Optional[int] = None


class ExperimentConfig(_Strict):
    graph: GraphSection
    data: DataSection
    algo: AlgoSection
    output: OutputSection = OutputSection()

    def echo(self) -> dict:
        return self.model_dump(mode="json")

    def with_value(self, name: str, value) -> "ExperimentConfig":
        """Copy with one field replaced; ``name`` is ``section.field`` or a
        bare field name that is unique across sections."""
        section, field = _resolve(name)
        raw = self.echo()
        raw[section][field] = value
        return parse_config(raw)

    def with_seed_offset(self, offset: int) -> "ExperimentConfig":
        raw = self.echo()
        for section in ("graph", "data", "algo"):
            if raw[section].get("seed") is not None:
                raw[section]["seed"] += offset
        return parse_config(raw)


_SECTIONS = {"graph": GraphSection, "data": DataSection, "algo": AlgoSection, "output": OutputSection}


def _resolve(name: str) -> tuple[str, str]:
    if "." in name:
        section, field = name.split(".", 1)
        if section in _SECTIONS and field in _SECTIONS[section].model_fields:
            return section, field
        raise ConfigError(f"unknown field {name!r}")
    hits = [s for s, cls in _SECTIONS.items() if name in cls.model_fields]
    if len(hits) != 1:
        raise ConfigError(f"field {name!r} is {'ambiguous' if hits else 'unknown'}; use section.field")
    return hits[0], name


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)
