"""End-to-end experiment: sampling strategy x t x feedback x repetition -> mutation scores."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Mapping, Optional, Sequence

from . import __version__
from .concretize import Strategy, StrategyKind, concretize_suite, total_attempts
from .errors import SemiConcreteError, ValidationError
from .feature_model import load_model
from .hybrid import AbstractionLevel, derive, lift
from .mutation import MutantSpec, generate_mutants, run_kill_matrix
from .sampling import SamplingConfig, sample
from .sim.core import RelevanceChecker
from .sim.setup import build_setup, load_bindings
from .stats import ComparisonResult, compare

log = logging.getLogger(__name__)

SAMPLING_STRATEGIES = (StrategyKind.PARAMETER_RANGE.value, StrategyKind.SUB_PARAMETER_RANGE.value)
BASELINE = StrategyKind.EXPERT_BASELINE.value
FEEDBACK_MODES = ("off", "on")

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
EXAMPLE_MODEL = os.path.join(DATA_DIR, "example_model.json")
EXAMPLE_BINDINGS = os.path.join(DATA_DIR, "bindings.json")


def derive_seed(master: int, *coords) -> int:
    """Stable 63-bit seed for a cell, independent of execution order."""
    text = json.dumps([int(master)] + [str(c) for c in coords])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def level_for(strategy: str) -> AbstractionLevel:
    if strategy == StrategyKind.PARAMETER_RANGE.value:
        return AbstractionLevel.SEMI_CONCRETE
    return AbstractionLevel.CONCRETE


@dataclass(frozen=True)
class ExperimentPlan:
    model: str = EXAMPLE_MODEL
    bindings: str = EXAMPLE_BINDINGS
    strategies: tuple[str, ...] = (BASELINE,) + SAMPLING_STRATEGIES
    t_values: tuple[int, ...] = (1, 2)
    feedback_modes: tuple[str, ...] = FEEDBACK_MODES
    repetitions: int = 10
    mutant_count: int = 50
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "t_values", tuple(int(t) for t in self.t_values))
        object.__setattr__(self, "feedback_modes", tuple(self.feedback_modes))
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if not self.strategies or not self.t_values:
            raise ValidationError("plan needs at least one strategy and one t value")
        for s in self.strategies:
            if s not in (BASELINE,) + SAMPLING_STRATEGIES:
                raise ValidationError(f"unknown strategy {s!r}")
        for t in self.t_values:
            if t not in (1, 2):
                raise ValidationError(f"t must be 1 or 2, got {t}")
        for f in self.feedback_modes:
            if f not in FEEDBACK_MODES:
                raise ValidationError(f"feedback mode must be 'off' or 'on', got {f!r}")
        if any(s != BASELINE for s in self.strategies) and not self.feedback_modes:
            raise ValidationError("sampling strategies need at least one feedback mode")

    @classmethod
    def from_dict(cls, doc: Mapping, base_dir: Optional[str] = None) -> "ExperimentPlan":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ValidationError(f"unknown plan fields: {sorted(extra)}")
        doc = dict(doc)
        for key in ("model", "bindings"):
            if key in doc and base_dir and not os.path.isabs(doc[key]):
                doc[key] = os.path.normpath(os.path.join(base_dir, doc[key]))
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def load_plan(path) -> ExperimentPlan:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"plan is not valid JSON: {exc}") from None
    return ExperimentPlan.from_dict(doc, os.path.dirname(os.path.abspath(path)))


@dataclass(frozen=True)
class CellResult:
    strategy: str
    t: int
    feedback: bool
    repetition: int
    seed: int
    suite_size: int
    valid_tests: int
    mutation_score: float
    simulations: int
    resample_attempts: int
    irrelevant: int


@dataclass(frozen=True)
class ComparisonRow:
    question: str
    t: int
    reference: str
    treatment: str
    result: ComparisonResult


@dataclass
class ExperimentResult:
    plan: dict
    cells: list[CellResult]
    comparisons: list[ComparisonRow]
    provenance: dict = field(default_factory=dict)

    def scores(self, strategy: str, t: int, feedback: bool) -> list[float]:
        return [c.mutation_score for c in self.cells if (c.strategy, c.t, c.feedback) == (strategy, t, feedback)]

    def to_dict(self) -> dict:
        return {
            "plan": self.plan,
            "cells": [asdict(c) for c in self.cells],
            "comparisons": [{**asdict(r), "result": asdict(r.result)} for r in self.comparisons],
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperimentResult":
        cells = [CellResult(**c) for c in doc["cells"]]
        comps = [ComparisonRow(r["question"], r["t"], r["reference"], r["treatment"], ComparisonResult(**r["result"]))
                 for r in doc["comparisons"]]
        return cls(doc["plan"], cells, comps, doc.get("provenance", {}))


def load_result(path) -> ExperimentResult:
    with open(path, encoding="utf-8") as fh:
        return ExperimentResult.from_dict(json.load(fh))


def group_label(strategy: str, feedback: bool) -> str:
    if strategy == BASELINE:
        return BASELINE
    return f"{strategy}+{'feedback' if feedback else 'random'}"


def comparisons(cells: Iterable[CellResult]) -> list[ComparisonRow]:
    """Pairwise tests per t; the single baseline score is replicated to the repetition count."""
    cells = list(cells)
    out: list[ComparisonRow] = []
    for t in sorted({c.t for c in cells}):
        groups: dict[tuple[str, bool], list[float]] = {}
        for c in sorted((c for c in cells if c.t == t), key=lambda c: c.repetition):
            groups.setdefault((c.strategy, c.feedback), []).append(c.mutation_score)
        reps = max((len(v) for k, v in groups.items() if k[0] != BASELINE), default=1)
        base = [v for k, v in groups.items() if k[0] == BASELINE]
        if base:
            groups = {k: v for k, v in groups.items() if k[0] != BASELINE}
            groups[(BASELINE, False)] = base[0][:1] * reps
        samplers = [s for s in SAMPLING_STRATEGIES if any(k[0] == s for k in groups)]
        modes = sorted({k[1] for k in groups if k[0] != BASELINE})

        def add(q, ref, treat):
            res = compare(groups[treat], groups[ref])
            out.append(ComparisonRow(q, t, group_label(*ref), group_label(*treat), res))

        if base:
            for s in samplers:
                for fb in modes:
                    if (s, fb) in groups:
                        add("RQ1", (BASELINE, False), (s, fb))
        if len(samplers) == 2:
            for fb in modes:
                if all((s, fb) in groups for s in samplers):
                    add("RQ2", (samplers[0], fb), (samplers[1], fb))
        for s in samplers:
            if (s, False) in groups and (s, True) in groups:
                add("RQ3", (s, False), (s, True))
    return out


def run(
    plan: ExperimentPlan,
    workers: int = 1,
    progress: Optional[Callable[[CellResult], None]] = None,
) -> ExperimentResult:
    logical = load_model(plan.model)
    bindings = load_bindings(plan.bindings)
    mutant_seed = derive_seed(plan.master_seed, "mutants")
    mutants: list[MutantSpec] = generate_mutants(plan.mutant_count, mutant_seed)
    relevance = RelevanceChecker(bindings)
    models = {}
    suites = {}
    cells: list[CellResult] = []

    def suite_for(strategy: str, t: int):
        level = level_for(strategy)
        if level not in models:
            models[level] = derive(logical, level)
        key = (level, t)
        if key not in suites:
            seed = derive_seed(plan.master_seed, "sample", level.value, t)
            cfgs = sample(models[level], SamplingConfig(t=t, seed=seed))
            suites[key] = [lift(c, models[level], level) for c in cfgs]
        return suites[key]

    def evaluate(strategy: str, t: int, feedback: bool, rep: int, seed: int) -> CellResult:
        scns = suite_for(strategy, t)
        strat = Strategy(strategy, feedback=feedback, seed=seed)
        outcomes = concretize_suite(scns, strat, relevance if feedback else None)
        setups = [build_setup(o.scenario, bindings) for o in outcomes]
        km = run_kill_matrix(setups, mutants, workers=workers)
        attempts = total_attempts(outcomes)
        overhead = attempts - len(outcomes)
        cell = CellResult(strategy, t, feedback, rep, seed, len(outcomes), len(km.valid_tests),
                          km.mutation_score, len(outcomes) + overhead, overhead,
                          sum(not o.relevant for o in outcomes))
        if progress is not None:
            progress(cell)
        return cell

    for t in plan.t_values:
        for strategy in plan.strategies:
            try:
                if strategy == BASELINE:
                    # deterministic: evaluated once, replicated in comparisons
                    cells.append(evaluate(strategy, t, False, 0, derive_seed(plan.master_seed, strategy, t)))
                    continue
                for mode in plan.feedback_modes:
                    fb = mode == "on"
                    for rep in range(plan.repetitions):
                        seed = derive_seed(plan.master_seed, strategy, t, mode, rep)
                        cells.append(evaluate(strategy, t, fb, rep, seed))
            except SemiConcreteError as exc:
                raise type(exc)(f"cell strategy={strategy} t={t}: {exc}") from exc
    provenance = {
        "master_seed": plan.master_seed,
        "mutant_seed": mutant_seed,
        "mutants": [asdict(m) for m in mutants],
        "model_hash": logical.digest,
        "polarity_mode": SamplingConfig().polarity_mode,
        "suite_sizes": {f"{lv.value}/t={t}": len(s) for (lv, t), s in sorted(suites.items())},
        "tool_version": __version__,
    }
    return ExperimentResult(plan.to_dict(), cells, comparisons(cells), provenance)


def trend_warnings(result: ExperimentResult) -> list[str]:
    """Cases where the t=2 median score falls below the t=1 median for the same strategy."""
    import statistics

    out = []
    keys = sorted({(c.strategy, c.feedback) for c in result.cells})
    for strategy, fb in keys:
        s1 = result.scores(strategy, 1, fb)
        s2 = result.scores(strategy, 2, fb)
        if s1 and s2 and statistics.median(s2) < statistics.median(s1):
            out.append(f"{group_label(strategy, fb)}: median t=2 {statistics.median(s2):.3f} "
                       f"< t=1 {statistics.median(s1):.3f}")
    return out
