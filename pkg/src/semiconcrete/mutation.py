"""Parameterised fault injection for the ACC and kill-matrix scoring."""

from __future__ import annotations

import csv
import json
import random
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .sim.core import OracleTolerances, run_verdicts, trajectory_differs
from .sim.setup import AccParameters, Controller, ScenarioSetup

_SHIFTS = (-0.9, -0.5, 0.5, 0.9)

# operator -> site -> magnitude pool
CATALOG: dict[str, dict[str, tuple[float, ...]]] = {
    "gain_scale": {s: (0.0, -1.0, 0.1, 0.5, 2.0, 10.0) for s in ("k_gap", "k_rel", "k_v")},
    "constant_shift": {s: _SHIFTS for s in ("tau", "d_min", "a_min", "a_max", "v_set")},
    "sign_flip": {s: (-1.0,) for s in ("relative_speed", "gap_error", "speed_error")},
    "clamp_swap": {"accel_limits": (1.0,)},
    "sensor_range_scale": {"sensor_range": (0.1, 0.3, 0.6, 2.0)},
    "stuck_output": {"a_cmd": (0.0, 1.0, -1.0)},  # 0, a_max, a_min
    "detection_offset": {"sensor_range": (0.25, 0.5, 0.9)},
}


def catalog_entries() -> list[tuple[str, str, float]]:
    return [(op, site, m) for op, sites in CATALOG.items() for site, pool in sites.items() for m in pool]


CATALOG_SIZE = len(catalog_entries())


@dataclass(frozen=True)
class MutantSpec:
    id: int
    operator: str
    site: str
    magnitude: float

    def __post_init__(self):
        pool = CATALOG.get(self.operator, {}).get(self.site)
        if pool is None:
            raise ValidationError(f"site {self.site!r} is not valid for operator {self.operator!r}")
        if self.magnitude not in pool:
            raise ValidationError(f"magnitude {self.magnitude} not in the pool of {self.operator}/{self.site}")

    @property
    def key(self) -> tuple[str, str, float]:
        return self.operator, self.site, self.magnitude

    def describe(self) -> str:
        return f"{self.operator}({self.site}, {self.magnitude:g})"


def generate_mutants(n: int, seed: int = 0, max_retries: int = 10_000) -> list[MutantSpec]:
    """Draw *n* distinct mutants: operator uniformly, then site and magnitude from its pools."""
    if n < 1:
        raise ValidationError("mutant count must be >= 1")
    if n > CATALOG_SIZE:
        raise ValidationError(f"requested {n} mutants but the catalog only has {CATALOG_SIZE} distinct entries")
    rng = random.Random(seed)
    ops = list(CATALOG)
    seen: set[tuple] = set()
    out: list[MutantSpec] = []
    retries = 0
    while len(out) < n:
        op = rng.choice(ops)
        site = rng.choice(list(CATALOG[op]))
        mag = rng.choice(CATALOG[op][site])
        if (op, site, mag) in seen:
            retries += 1
            if retries <= max_retries:
                continue
            # deterministic fallback once rejection sampling stalls
            op, site, mag = rng.choice([e for e in catalog_entries() if e not in seen])
        seen.add((op, site, mag))
        out.append(MutantSpec(len(out), op, site, mag))
    return out


def apply_mutant(spec: MutantSpec, nominal: AccParameters = AccParameters()) -> Controller:
    base = Controller.nominal(nominal)
    op, site, m = spec.operator, spec.site, spec.magnitude
    if op == "gain_scale":
        return replace(base, **{site: getattr(base, site) * m})
    if op == "constant_shift":
        if site == "v_set":
            return replace(base, v_set_scale=1.0 + m)
        return replace(base, **{site: getattr(base, site) * (1.0 + m)})
    if op == "sign_flip":
        knob = {"relative_speed": "rel_sign", "gap_error": "gap_sign", "speed_error": "speed_sign"}[site]
        return replace(base, **{knob: -1.0})
    if op == "clamp_swap":
        return replace(base, a_min=base.a_max, a_max=base.a_min)
    if op == "sensor_range_scale":
        return replace(base, sensor_range=base.sensor_range * m)
    if op == "stuck_output":
        value = {0.0: 0.0, 1.0: base.a_max, -1.0: base.a_min}[m]
        return replace(base, stuck=value)
    if op == "detection_offset":
        return replace(base, detection_offset=base.sensor_range * m)
    raise ValidationError(f"unknown operator {op!r}")


@dataclass
class KillMatrix:
    """Rows are mutants, columns are the valid tests (index into the original suite)."""

    killed: np.ndarray  # (n_mutants, n_valid_tests) bool
    mutants: list[MutantSpec]
    valid_tests: list[int]
    invalid_tests: list[int]

    @property
    def mutation_score(self) -> float:
        return float(self.killed.any(axis=1).sum()) / len(self.mutants)

    def detected(self) -> np.ndarray:
        return self.killed.any(axis=1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["mutant"] + [f"test{j}" for j in self.valid_tests] + ["killed"])
            for spec, row in zip(self.mutants, self.killed):
                w.writerow([spec.id] + [int(x) for x in row] + [int(row.any())])
            w.writerow(["score"] + [int(x) for x in self.killed.sum(axis=0)] + [f"{self.mutation_score:.6f}"])


def run_kill_matrix(
    setups: Sequence[ScenarioSetup],
    mutants: Sequence[MutantSpec],
    nominal: AccParameters = AccParameters(),
    tolerances: OracleTolerances = OracleTolerances(),
    criterion: str = "oracle",
    workers: int = 1,
    nominal_pass: Optional[np.ndarray] = None,
) -> KillMatrix:
    """Execute every test on nominal and on every mutant.

    Tests failing on the nominal controller are excluded before any cell is
    computed. *nominal_pass* may carry precomputed nominal verdicts.
    """
    if not mutants:
        raise ValidationError("need at least one mutant")
    mutants = list(mutants)
    base = Controller.nominal(nominal)
    if nominal_pass is None:
        nominal_pass = run_verdicts(setups, [base] * len(setups), tolerances, workers).all(axis=1)
    valid = [i for i, ok in enumerate(nominal_pass) if ok]
    invalid = [i for i, ok in enumerate(nominal_pass) if not ok]
    if not valid:
        raise ValidationError("no test passes on the nominal controller")
    ctrls = [apply_mutant(m, nominal) for m in mutants]
    rows_s = [setups[j] for _ in ctrls for j in valid]
    rows_c = [c for c in ctrls for _ in valid]
    if criterion == "oracle":
        ok = run_verdicts(rows_s, rows_c, tolerances, workers).all(axis=1)
        killed = ~ok
    elif criterion == "trajectory":
        killed = trajectory_differs(rows_s, rows_c, [base] * len(rows_s), workers=workers)
    else:
        raise ValidationError(f"unknown kill criterion {criterion!r}")
    return KillMatrix(killed.reshape(len(ctrls), len(valid)), mutants, valid, invalid)


def save_mutants(path, mutants: Sequence[MutantSpec], seed: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"seed": seed, "catalog_size": CATALOG_SIZE, "mutants": [asdict(m) for m in mutants]}, fh, indent=1)


def load_mutants(path) -> list[MutantSpec]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [MutantSpec(**m) for m in doc["mutants"]]
