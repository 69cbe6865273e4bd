"""t-wise coverage sampling over feature models.

The sampler is a greedy covering-array builder in the spirit of YASA: each
new configuration starts from the first still-uncovered interaction, absorbs
as many further uncovered interactions as stay jointly satisfiable, and is
then completed to a full valid configuration by the solver.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .feature_model import Configuration, FeatureModel, is_valid

POLARITY_MODES = ("both_polarities", "positive_only")

# Seed for the witness phases used while classifying tuples; it only affects
# speed, never the set of valid tuples.
_WITNESS_SEED = 0x5EED


class SamplingError(ValidationError):
    def __init__(self, message, uncovered=()):
        super().__init__(message)
        self.uncovered = list(uncovered)


@dataclass(frozen=True)
class SamplingConfig:
    t: int = 2
    seed: int = 0
    polarity_mode: str = "both_polarities"
    max_configs: Optional[int] = None

    def __post_init__(self):
        if self.t < 1:
            raise ValidationError("interaction strength t must be >= 1")
        if self.polarity_mode not in POLARITY_MODES:
            raise ValidationError(f"polarity_mode must be one of {POLARITY_MODES}")


@dataclass(frozen=True)
class InteractionTuple:
    literals: tuple[tuple[str, bool], ...]

    def __str__(self):
        return "{" + ", ".join(("" if p else "!") + n for n, p in self.literals) + "}"


@dataclass(frozen=True)
class CoverageReport:
    total_valid_tuples: int
    covered_tuples: int
    uncovered: list[InteractionTuple]

    @property
    def ratio(self) -> float:
        if self.total_valid_tuples == 0:
            return 1.0
        return self.covered_tuples / self.total_valid_tuples


def _all_tuples(n: int, t: int, polarity_mode: str) -> np.ndarray:
    """Signed-literal tuples in canonical order: feature indices, then polarity (+ before -)."""
    if t > n:
        raise ValidationError(f"t={t} exceeds the number of features ({n})")
    signs = [(1,)] * t if polarity_mode == "positive_only" else [(1, -1)] * t
    rows = [
        [s * (v + 1) for v, s in zip(vs, ss)]
        for vs in itertools.combinations(range(n), t)
        for ss in itertools.product(*signs)
    ]
    return np.asarray(rows, dtype=np.int64).reshape(-1, t)


def _match(tuples: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """``out[k, r]`` is True iff configuration row ``r`` satisfies tuple ``k``."""
    if len(tuples) == 0 or len(rows) == 0:
        return np.zeros((len(tuples), len(rows)), dtype=bool)
    cols = rows.T[np.abs(tuples) - 1]  # (K, t, R)
    return np.all(cols == (tuples > 0)[:, :, None], axis=1)


def _to_interaction(model: FeatureModel, lits: Sequence[int]) -> InteractionTuple:
    return InteractionTuple(tuple((model.features[abs(l) - 1].name, l > 0) for l in lits))


def _as_row(model: FeatureModel, cfg: Iterable[str]) -> np.ndarray:
    row = np.zeros(len(model), dtype=bool)
    for name in cfg:
        row[model.index[name]] = True
    return row


def valid_tuples(model: FeatureModel, t: int, polarity_mode: str = "both_polarities") -> np.ndarray:
    """All interaction tuples of strength *t* that some valid configuration covers."""
    solver = model.solver
    cand = _all_tuples(len(model), t, polarity_mode)
    status = np.zeros(len(cand), dtype=np.int8)  # 1 valid, -1 invalid, 0 unknown
    dead = set()
    for v in range(1, len(model) + 1):
        for lit in (v, -v):
            if solver.closure([lit]) is None:
                dead.add(lit)
    if dead:
        hit = np.isin(cand, list(dead)).any(axis=1)
        status[hit] = -1
    rng = random.Random(_WITNESS_SEED)
    for k in range(len(cand)):
        if status[k] != 0:
            continue
        phase = [rng.random() < 0.5 for _ in range(len(model))]
        sol = solver.solve(cand[k].tolist(), phase)
        if sol is None:
            status[k] = -1
            continue
        unknown = np.flatnonzero(status == 0)
        covered = _match(cand[unknown], np.asarray([sol]))[:, 0]
        status[unknown[covered]] = 1
    return cand[status == 1]


def sample(model: FeatureModel, cfg: SamplingConfig = SamplingConfig()) -> list[Configuration]:
    """Greedy t-wise covering suite of valid configurations (deterministic per seed)."""
    solver = model.solver
    n = len(model)
    if solver.solve() is None:
        raise SamplingError("model has no valid configuration")
    tuples = valid_tuples(model, cfg.t, cfg.polarity_mode)
    uncovered = np.ones(len(tuples), dtype=bool)
    rng = random.Random(cfg.seed)
    phase = [False] * n
    suite: list[Configuration] = []
    while uncovered.any():
        if cfg.max_configs is not None and len(suite) >= cfg.max_configs:
            rest = [_to_interaction(model, tuples[k]) for k in np.flatnonzero(uncovered)]
            raise SamplingError(f"max_configs={cfg.max_configs} leaves {len(rest)} tuples uncovered", rest)
        order = np.flatnonzero(uncovered).tolist()
        first, rest = order[0], order[1:]
        rng.shuffle(rest)
        partial = tuples[first].tolist()
        witness = solver.solve(partial, phase)
        fixed = solver.closure(partial)
        for k in rest:
            lits = tuples[k].tolist()
            if all(witness[abs(l) - 1] == (l > 0) for l in lits):
                new = [l for l in lits if fixed[abs(l)] == 0]
                if new:
                    partial.extend(new)
                    fixed = solver.closure(partial)
                continue
            if any(fixed[abs(l)] == (-1 if l > 0 else 1) for l in lits):
                continue
            trial = partial + [l for l in lits if fixed[abs(l)] == 0]
            sol = solver.solve(trial, phase)
            if sol is None:
                continue
            witness = sol
            partial = trial
            fixed = solver.closure(partial)
        row = np.asarray(witness, dtype=bool)
        idx = np.flatnonzero(uncovered)
        uncovered[idx[_match(tuples[idx], row[None, :])[:, 0]]] = False
        suite.append(model.config_from_model(witness))
    return suite


def measure_coverage(
    model: FeatureModel,
    suite: Sequence[Iterable[str]],
    t: int,
    polarity_mode: str = "both_polarities",
) -> CoverageReport:
    rows = []
    for i, c in enumerate(suite):
        c = frozenset(c)
        if not is_valid(model, c):
            raise ValidationError(f"configuration {i} of the suite is not valid")
        rows.append(_as_row(model, c))
    tuples = valid_tuples(model, t, polarity_mode)
    if rows:
        hit = _match(tuples, np.asarray(rows)).any(axis=1)
    else:
        hit = np.zeros(len(tuples), dtype=bool)
    missing = [_to_interaction(model, tuples[k]) for k in np.flatnonzero(~hit)]
    return CoverageReport(len(tuples), int(hit.sum()), missing)


def save_suite(path, model: FeatureModel, suite: Sequence[Configuration], cfg: SamplingConfig,
               level: str = "semi_concrete") -> None:
    order = model.index
    doc = {
        "header": {"model_hash": model.digest, "t": cfg.t, "seed": cfg.seed,
                   "polarity_mode": cfg.polarity_mode, "level": level},
        "configurations": [sorted(c, key=order.__getitem__) for c in suite],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_suite(path) -> tuple[dict, list[Configuration]]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return doc["header"], [frozenset(c) for c in doc["configurations"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed suite file: {exc}") from None
