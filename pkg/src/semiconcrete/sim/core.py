"""Simulation front end: traces, relevance check and pass/fail oracles."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..errors import SimulationError, ValidationError
from ..hybrid import ConcreteScenario
from . import kernels
from .setup import AccParameters, Bindings, Controller, ScenarioSetup, build_setup

RELEVANCE_WINDOW = 10.0
ORACLES = ("collision_free", "safe_following", "set_speed")
_CHUNK = 256


@dataclass(frozen=True)
class OracleTolerances:
    settle_time: float = 10.0  # O2/O3 only look at t >= settle_time
    min_time_gap: float = 1.0  # s
    speed_tol: float = 1.0  # m/s
    recovery_time: float = 20.0  # free driving needed before O3 applies
    eps: float = 0.5  # m/s floor in the time-gap denominator


@dataclass(frozen=True)
class OracleVerdict:
    passed: bool
    first_violation: Optional[float] = None


@dataclass
class SimulationTrace:
    t: np.ndarray
    ego_x: np.ndarray
    ego_v: np.ndarray
    ego_a: np.ndarray
    lead_x: np.ndarray
    lead_v: np.ndarray
    gap: np.ndarray
    detected: np.ndarray
    lead_present: bool
    verdicts: dict = field(default_factory=dict)

    COLUMNS = ("t", "ego_x", "ego_v", "ego_a", "lead_x", "lead_v", "gap", "detected")

    def __len__(self):
        return len(self.t)

    def equals(self, other: "SimulationTrace") -> bool:
        """Bitwise equality of every column (NaN-aware)."""
        return all(
            np.array_equal(getattr(self, c), getattr(other, c), equal_nan=c not in ("detected",))
            for c in self.COLUMNS
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for k in range(len(self.t)):
                w.writerow([repr(float(getattr(self, c)[k])) if c != "detected" else int(self.detected[k])
                            for c in self.COLUMNS])


def _check_finite(ego_x, ego_v, ego_a, rows):
    bad = ~(np.isfinite(ego_x).all(axis=1) & np.isfinite(ego_v).all(axis=1) & np.isfinite(ego_a).all(axis=1))
    if bad.any():
        b = int(np.flatnonzero(bad)[0])
        k = int(np.flatnonzero(~np.isfinite(ego_v[b]) | ~np.isfinite(ego_x[b]) | ~np.isfinite(ego_a[b]))[0])
        raise SimulationError(f"non-finite ego state in run {rows[b]} at step {k}")


def _integrate_rows(scen: np.ndarray, ctrl: np.ndarray, dt: float, n_steps: int, workers: int = 1):
    if workers <= 1 or len(scen) <= 1:
        return kernels.integrate(scen, ctrl, dt, n_steps)
    bounds = np.linspace(0, len(scen), min(workers, len(scen)) + 1).astype(int)
    parts = [(scen[a:b], ctrl[a:b]) for a, b in zip(bounds, bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outs = list(pool.map(lambda p: kernels.integrate(p[0], p[1], dt, n_steps), parts))
    return tuple(np.concatenate(cols) for cols in zip(*outs))


def _same_grid(setups: Sequence[ScenarioSetup]) -> tuple[float, int]:
    dts = {s.dt for s in setups}
    steps = {s.n_steps for s in setups}
    if len(dts) != 1 or len(steps) != 1:
        raise ValidationError("batched setups must share dt and duration")
    return dts.pop(), steps.pop()


def _trace(setup: ScenarioSetup, dt: float, cols, b: int) -> SimulationTrace:
    ego_x, ego_v, ego_a, lead_x, lead_v, det = (c[b] for c in cols)
    t = np.arange(len(ego_x)) * dt
    if setup.lead_present:
        gap = lead_x - ego_x
    else:
        lead_x = np.full_like(ego_x, np.nan)
        lead_v = np.full_like(ego_x, np.nan)
        gap = np.full_like(ego_x, np.nan)
    return SimulationTrace(t, ego_x, ego_v, ego_a, lead_x, lead_v, gap, det, setup.lead_present)


def simulate_many(
    setups: Sequence[ScenarioSetup],
    controllers: Sequence[Controller],
    workers: int = 1,
) -> list[SimulationTrace]:
    """Simulate ``setups[i]`` under ``controllers[i]`` for every i."""
    if len(setups) != len(controllers):
        raise ValidationError("setups and controllers must have equal length")
    if not setups:
        return []
    dt, n = _same_grid(setups)
    scen = np.stack([s.row() for s in setups])
    ctrl = np.stack([c.row() for c in controllers])
    cols = _integrate_rows(scen, ctrl, dt, n, workers)
    _check_finite(cols[0], cols[1], cols[2], list(range(len(setups))))
    return [_trace(s, dt, cols, b) for b, s in enumerate(setups)]


def simulate(setup: ScenarioSetup, acc=AccParameters()) -> SimulationTrace:
    ctrl = acc if isinstance(acc, Controller) else Controller.nominal(acc)
    return simulate_many([setup], [ctrl])[0]


def is_relevant(trace: SimulationTrace, window: float = RELEVANCE_WINDOW) -> bool:
    """An object is inside sensor range at some sample with t <= window."""
    dt = trace.t[1] - trace.t[0] if len(trace.t) > 1 else 0.0
    if len(trace.t) == 0 or trace.t[-1] < window - 1e-9 * max(1.0, dt):
        raise ValidationError(f"trace covers {trace.t[-1] if len(trace.t) else 0:.3f} s < {window} s")
    in_window = trace.t <= window + 1e-9
    return bool(np.any(trace.detected[in_window]))


# ---------------------------------------------------------------------------
# oracles (vectorised over runs)


def _first_time(fail: np.ndarray, dt: float) -> list[Optional[float]]:
    any_fail = fail.any(axis=1)
    first = fail.argmax(axis=1)
    return [float(first[b] * dt) if any_fail[b] else None for b in range(len(fail))]


def _oracle_arrays(ego_v, gap, det, lead_present, v_set, dt, tol: OracleTolerances):
    """Boolean failure masks (B, T) for each oracle."""
    n_t = ego_v.shape[1]
    t = np.arange(n_t) * dt
    present = lead_present[:, None]
    with np.errstate(invalid="ignore"):
        o1 = present & ~(gap > 0)
        tg = gap / np.maximum(ego_v, tol.eps)
        settled = t[None, :] >= tol.settle_time - 1e-9
        o2 = settled & det & (tg < tol.min_time_gap)
    k = np.arange(n_t)[None, :]
    last = np.maximum.accumulate(np.where(det, k, -1), axis=1)
    free_for = np.where(last >= 0, (k - last) * dt, t[None, :])
    free = settled & ~det & (free_for >= tol.recovery_time - 1e-9)
    o3 = free & (np.abs(ego_v - v_set[:, None]) > tol.speed_tol)
    return o1, o2, o3


def evaluate_oracles(
    trace: SimulationTrace, setup: ScenarioSetup, tolerances: OracleTolerances = OracleTolerances()
) -> dict[str, OracleVerdict]:
    dt = setup.dt
    gap = trace.gap if setup.lead_present else np.full_like(trace.ego_v, np.nan)
    masks = _oracle_arrays(trace.ego_v[None], gap[None], trace.detected[None],
                           np.array([setup.lead_present]), np.array([setup.ego_v_set]), dt, tolerances)
    out = {}
    for name, m in zip(ORACLES, masks):
        first = _first_time(m, dt)[0]
        out[name] = OracleVerdict(first is None, first)
    trace.verdicts = out
    return out


def passes(verdicts: dict[str, OracleVerdict]) -> bool:
    return all(v.passed for v in verdicts.values())


def run_verdicts(
    setups: Sequence[ScenarioSetup],
    controllers: Sequence[Controller],
    tolerances: OracleTolerances = OracleTolerances(),
    workers: int = 1,
    chunk: int = _CHUNK,
) -> np.ndarray:
    """Pass/fail per run and oracle, shape (B, 3), without keeping traces."""
    if len(setups) != len(controllers):
        raise ValidationError("setups and controllers must have equal length")
    out = np.zeros((len(setups), len(ORACLES)), dtype=bool)
    if not setups:
        return out
    dt, n = _same_grid(setups)
    scen = np.stack([s.row() for s in setups])
    ctrl = np.stack([c.row() for c in controllers])
    present = scen[:, 2] > 0.5
    v_set = scen[:, 1]
    for a in range(0, len(scen), chunk):
        b = min(a + chunk, len(scen))
        ego_x, ego_v, ego_a, lead_x, lead_v, det = _integrate_rows(scen[a:b], ctrl[a:b], dt, n, workers)
        _check_finite(ego_x, ego_v, ego_a, list(range(a, b)))
        with np.errstate(invalid="ignore"):
            gap = np.where(present[a:b, None], lead_x - ego_x, np.nan)
        masks = _oracle_arrays(ego_v, gap, det, present[a:b], v_set[a:b], dt, tolerances)
        out[a:b] = np.stack([~m.any(axis=1) for m in masks], axis=1)
    return out


def trajectory_differs(
    setups: Sequence[ScenarioSetup],
    controllers: Sequence[Controller],
    reference: Sequence[Controller],
    threshold: float = 0.5,
    workers: int = 1,
) -> np.ndarray:
    """True where the ego speed profile deviates from the reference run by more than *threshold* m/s."""
    a = simulate_many(setups, controllers, workers)
    b = simulate_many(setups, reference, workers)
    return np.array([np.max(np.abs(x.ego_v - y.ego_v)) > threshold for x, y in zip(a, b)], dtype=bool)


class RelevanceChecker:
    """Scenario relevance: simulate with the nominal ACC for the first window seconds."""

    def __init__(self, bindings: Bindings, acc: AccParameters = AccParameters(), window: float = RELEVANCE_WINDOW):
        self.bindings = bindings
        self.controller = Controller.nominal(acc)
        self.window = window
        self.simulations = 0

    def _setups(self, scenarios):
        out = []
        for s in scenarios:
            setup = build_setup(s, self.bindings)
            dur = math.ceil(self.window / setup.dt) * setup.dt
            out.append(replace(setup, duration=max(dur, 10.0)))
        return out

    def many(self, scenarios: Sequence[ConcreteScenario]) -> list[bool]:
        setups = self._setups(scenarios)
        self.simulations += len(setups)
        traces = simulate_many(setups, [self.controller] * len(setups))
        return [is_relevant(tr, self.window) for tr in traces]

    def __call__(self, scenario: ConcreteScenario) -> bool:
        return self.many([scenario])[0]


def nominal_scenarios(dt: float = 0.02, duration: float = 40.0) -> list[ScenarioSetup]:
    """Twelve hand-picked setups covering the controller's operating modes."""
    kmh = 1 / 3.6
    base = dict(dt=dt, duration=duration)
    return [
        ScenarioSetup(100 * kmh, 100 * kmh, **base),
        ScenarioSetup(60 * kmh, 120 * kmh, **base),
        ScenarioSetup(150 * kmh, 90 * kmh, **base),
        ScenarioSetup(25.0, 25.0, True, 2.0 + 1.8 * 25.0, 25.0, **base),
        ScenarioSetup(120 * kmh, 130 * kmh, True, 120.0, 80 * kmh, **base),
        ScenarioSetup(80 * kmh, 100 * kmh, True, 40.0, 80 * kmh, "brake", 5.0, 4.0, **base),
        ScenarioSetup(100 * kmh, 120 * kmh, True, 60.0, 90 * kmh, "accelerate", 8.0, 1.0, **base),
        ScenarioSetup(130 * kmh, 130 * kmh, True, 200.0, 100 * kmh, **base),
        ScenarioSetup(90 * kmh, 110 * kmh, True, 50.0, 70 * kmh, "brake", 12.0, 2.0, rain_intensity=10.0, **base),
        ScenarioSetup(110 * kmh, 110 * kmh, True, 90.0, 110 * kmh, sensor_scale=0.5, **base),
        ScenarioSetup(70 * kmh, 140 * kmh, True, 30.0, 50 * kmh, "accelerate", 3.0, 2.0, **base),
        ScenarioSetup(50 * kmh, 80 * kmh, True, 25.0, 40 * kmh, "brake", 15.0, 6.0, brake_scale=0.9, **base),
    ]
