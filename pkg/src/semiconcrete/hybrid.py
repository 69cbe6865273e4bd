"""Hybrid scenario feature models: logical, semi-concrete and concrete layers.

The logical layer holds structure features plus logical features that carry
parameters. Deriving the semi-concrete layer expands every discrete
parameter into concrete child features (one per value). The concrete layer
additionally expands every continuous parameter into one concrete child per
sub-range, each remembering the expert value of that sub-range.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .errors import ModelError
from .feature_model import (
    Configuration,
    Feature,
    FeatureModel,
    ParameterSpec,
    SubRange,
    is_valid,
)


class AbstractionLevel(str, enum.Enum):
    LOGICAL = "logical"
    SEMI_CONCRETE = "semi_concrete"
    CONCRETE = "concrete"


@dataclass(frozen=True)
class OpenParameter:
    id: str
    lo: float
    hi: float
    unit: str
    sub_ranges: tuple[SubRange, ...] = ()


@dataclass(frozen=True)
class SemiConcreteScenario:
    configuration: Configuration
    open_parameters: tuple[OpenParameter, ...]
    discrete_values: Mapping[str, str] = field(default_factory=dict)
    sub_range_bindings: Optional[Mapping[str, int]] = None

    def parameter(self, pid: str) -> OpenParameter:
        for p in self.open_parameters:
            if p.id == pid:
                return p
        raise KeyError(pid)


@dataclass(frozen=True)
class Provenance:
    strategy: str
    seed: int
    attempts: int


@dataclass(frozen=True)
class ConcreteScenario:
    configuration: Configuration
    values: Mapping[str, float]
    units: Mapping[str, str]
    discrete_values: Mapping[str, str] = field(default_factory=dict)
    provenance: Optional[Provenance] = None

    def to_dict(self) -> dict:
        doc = {
            "configuration": sorted(self.configuration),
            "values": dict(self.values),
            "units": dict(self.units),
            "discrete": dict(self.discrete_values),
        }
        if self.provenance is not None:
            doc["provenance"] = {"strategy": self.provenance.strategy, "seed": self.provenance.seed,
                                 "attempts": self.provenance.attempts}
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ConcreteScenario":
        prov = doc.get("provenance")
        return cls(
            frozenset(doc["configuration"]),
            {k: float(v) for k, v in doc["values"].items()},
            dict(doc.get("units", {})),
            dict(doc.get("discrete", {})),
            None if prov is None else Provenance(prov["strategy"], int(prov["seed"]), int(prov["attempts"])),
        )


def value_feature_name(pid: str, value: str) -> str:
    return f"{pid}_{value}"


def sub_range_feature_name(pid: str, k: int) -> str:
    return f"{pid}_sub{k}"


def _expand(f: Feature, continuous: bool) -> Feature:
    kids = tuple(_expand(c, continuous) for c in f.children)
    p = f.parameter
    if p is None or f.kind != "logical":
        return replace(f, children=kids) if kids != f.children else f
    if f.children:
        raise ModelError("parameter-carrying feature must be a leaf in the logical model", f.name)
    if not p.continuous:
        if len(p.values) < 1:
            raise ModelError("discrete parameter needs at least one value", f.name)
        new = tuple(
            Feature(value_feature_name(p.id, v), "concrete", binding={"parameter": p.id, "value": v})
            for v in p.values
        )
        return replace(f, group="alternative" if len(new) > 1 else "and", children=new)
    if not continuous:
        return f
    if not p.sub_ranges or any(s.expert_value is None for s in p.sub_ranges):
        raise ModelError("continuous parameter needs sub_ranges with expert_value for the concrete layer", f.name)
    new = tuple(
        Feature(sub_range_feature_name(p.id, k), "concrete",
                binding={"parameter": p.id, "sub_range": k, "lo": s.lo, "hi": s.hi, "expert_value": s.expert_value})
        for k, s in enumerate(p.sub_ranges)
    )
    return replace(f, group="alternative" if len(new) > 1 else "and", children=new)


def _check_logical(model: FeatureModel) -> None:
    for f in model.features:
        if f.kind == "concrete":
            raise ModelError("logical model may only contain structure and logical features", f.name)


def derive_semi_concrete(logical: FeatureModel) -> FeatureModel:
    _check_logical(logical)
    return FeatureModel(_expand(logical.root, continuous=False), logical.constraints, logical.name)


def derive_concrete(logical: FeatureModel) -> FeatureModel:
    _check_logical(logical)
    return FeatureModel(_expand(logical.root, continuous=True), logical.constraints, logical.name)


def derive(logical: FeatureModel, level: AbstractionLevel) -> FeatureModel:
    level = AbstractionLevel(level)
    if level is AbstractionLevel.LOGICAL:
        _check_logical(logical)
        return logical
    if level is AbstractionLevel.SEMI_CONCRETE:
        return derive_semi_concrete(logical)
    return derive_concrete(logical)


def project(cfg: Iterable[str], target: FeatureModel) -> Configuration:
    """Drop every feature of *cfg* that *target* (a coarser layer) does not contain."""
    return frozenset(n for n in cfg if n in target)


def lift(cfg: Iterable[str], model: FeatureModel, level: AbstractionLevel) -> SemiConcreteScenario:
    """Turn a configuration of *model* into a scenario with open continuous parameters."""
    level = AbstractionLevel(level)
    cfg = frozenset(cfg)
    if not is_valid(model, cfg):
        raise ModelError("configuration is not valid for this model")
    open_params = []
    discrete = {}
    bindings: dict[str, int] = {}
    for f in model.features:
        p: Optional[ParameterSpec] = f.parameter
        if p is None or f.name not in cfg:
            continue
        chosen = [c for c in f.children if c.name in cfg and c.binding]
        if p.continuous:
            open_params.append(OpenParameter(p.id, p.lo, p.hi, p.unit, p.sub_ranges))
            if chosen:
                bindings[p.id] = int(chosen[0].binding["sub_range"])
        else:
            if not chosen:
                raise ModelError(f"discrete parameter {p.id!r} is not resolved at level {level.value}", f.name)
            discrete[p.id] = chosen[0].binding["value"]
    if level is AbstractionLevel.CONCRETE:
        missing = [p.id for p in open_params if p.id not in bindings]
        if missing:
            raise ModelError(f"no sub-range selected for {missing}")
        return SemiConcreteScenario(cfg, tuple(open_params), discrete, bindings)
    return SemiConcreteScenario(cfg, tuple(open_params), discrete, None)
