"""Concretization strategies: expert baseline, range sampling, sub-range sampling.

Every random draw comes from a generator seeded by ``(seed, scenario index,
attempt)``, so a scenario's values never depend on suite order, on how many
other scenarios were resampled, or on parallel execution.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .hybrid import ConcreteScenario, Provenance, SemiConcreteScenario

DEFAULT_BUDGET = 50

RelevancePredicate = Callable[[ConcreteScenario], bool]


class StrategyKind(str, enum.Enum):
    EXPERT_BASELINE = "expert_baseline"
    PARAMETER_RANGE = "parameter_range"
    SUB_PARAMETER_RANGE = "sub_parameter_range"


class ConcretizationError(ValidationError):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    feedback: bool = False
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.budget < 1:
            raise ValidationError("budget must be >= 1")
        if self.distribution != "uniform":
            raise ValidationError(f"unsupported distribution {self.distribution!r}")

    @property
    def tag(self) -> str:
        return self.kind.value + ("+feedback" if self.feedback else "")


@dataclass(frozen=True)
class ConcretizationOutcome:
    scenario: ConcreteScenario
    relevant: bool
    attempts: int

    def to_dict(self) -> dict:
        doc = self.scenario.to_dict()
        doc["relevant"] = self.relevant
        return doc


def _rng(seed: int, index: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), index, attempt]))


def _bounds(scn: SemiConcreteScenario, kind: StrategyKind) -> list[tuple[str, float, float]]:
    out = []
    for p in scn.open_parameters:
        if kind is StrategyKind.PARAMETER_RANGE:
            out.append((p.id, p.lo, p.hi))
            continue
        if not p.sub_ranges:
            raise ConcretizationError(f"parameter {p.id!r} has no sub-ranges")
        binding = (scn.sub_range_bindings or {}).get(p.id)
        if binding is None:
            raise ConcretizationError(f"missing sub-range binding for {p.id!r}")
        if not 0 <= binding < len(p.sub_ranges):
            raise ConcretizationError(f"sub-range index {binding} out of range for {p.id!r}")
        s = p.sub_ranges[binding]
        if kind is StrategyKind.EXPERT_BASELINE:
            if s.expert_value is None:
                raise ConcretizationError(f"sub-range {binding} of {p.id!r} has no expert value")
            out.append((p.id, s.expert_value, s.expert_value))
        else:
            out.append((p.id, s.lo, s.hi))
    return out


def draw(scn: SemiConcreteScenario, strategy: Strategy, index: int = 0, attempt: int = 0) -> ConcreteScenario:
    """One concrete instantiation of *scn* (no relevance check)."""
    bounds = _bounds(scn, strategy.kind)
    if strategy.kind is StrategyKind.EXPERT_BASELINE:
        values = {pid: float(lo) for pid, lo, _ in bounds}
    else:
        rng = _rng(strategy.seed, index, attempt)
        values = {}
        for pid, lo, hi in bounds:
            x = float(rng.uniform(lo, hi))
            values[pid] = min(max(x, lo), hi)
    units = {p.id: p.unit for p in scn.open_parameters}
    return ConcreteScenario(scn.configuration, values, units, dict(scn.discrete_values),
                            Provenance(strategy.tag, strategy.seed, attempt + 1))


def _check_many(relevance, scenarios):
    many = getattr(relevance, "many", None)
    if many is not None:
        return list(many(scenarios))
    return [bool(relevance(s)) for s in scenarios]


def concretize(
    scn: SemiConcreteScenario,
    strategy: Strategy,
    relevance: Optional[RelevancePredicate] = None,
    index: int = 0,
) -> ConcretizationOutcome:
    """Instantiate *scn*; with feedback, redraw until relevant or the budget is spent.

    A relevance object exposing ``many(scenarios) -> list[bool]`` is queried
    in batches. Draws are fixed by (seed, index, attempt), so batching only
    changes how the checks are scheduled, not which draw is returned.
    """
    if strategy.kind is StrategyKind.EXPERT_BASELINE or not strategy.feedback:
        s = draw(scn, strategy, index, 0)
        rel = True if relevance is None else bool(relevance(s))
        return ConcretizationOutcome(s, rel, 1)
    if relevance is None:
        raise ConcretizationError("feedback requires a relevance predicate")
    attempt = 0
    block = 1
    growth = 4 if hasattr(relevance, "many") else 1  # plain predicates are checked one draw at a time
    last = None
    while attempt < strategy.budget:
        stop = min(strategy.budget, attempt + block)
        batch = [draw(scn, strategy, index, a) for a in range(attempt, stop)]
        for a, (s, ok) in enumerate(zip(batch, _check_many(relevance, batch)), start=attempt):
            if ok:
                return ConcretizationOutcome(s, True, a + 1)
            last = s
        attempt = stop
        block *= growth
    return ConcretizationOutcome(last, False, strategy.budget)


def concretize_suite(
    suite: Sequence[SemiConcreteScenario],
    strategy: Strategy,
    relevance: Optional[RelevancePredicate] = None,
) -> list[ConcretizationOutcome]:
    out = []
    for i, scn in enumerate(suite):
        try:
            out.append(concretize(scn, strategy, relevance, index=i))
        except ValidationError as exc:
            raise ConcretizationError(f"scenario {i}: {exc}") from None
    return out


def total_attempts(outcomes: Sequence[ConcretizationOutcome]) -> int:
    return sum(o.attempts for o in outcomes)


def save_outcomes(path, outcomes: Sequence[ConcretizationOutcome]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"scenarios": [o.to_dict() for o in outcomes]}, fh, indent=1)


def load_scenarios(path) -> list[ConcreteScenario]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return [ConcreteScenario.from_dict(d) for d in doc["scenarios"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed scenario file: {exc}") from None
