"""Scenario setups, controller parameters and the parameter-binding table."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping, Optional

import numpy as np

from ..errors import ValidationError
from ..hybrid import ConcreteScenario

MANEUVERS = {"constant": 0, "brake": 1, "accelerate": 2}

KMH = 1 / 3.6


@dataclass(frozen=True)
class ScenarioSetup:
    ego_v0: float
    ego_v_set: float
    lead_present: bool = False
    lead_gap0: float = 100.0
    lead_v0: float = 0.0
    lead_maneuver: str = "constant"
    maneuver_start: float = 0.0
    maneuver_magnitude: float = 0.0
    rain_intensity: float = 0.0
    brake_scale: float = 1.0
    sensor_scale: float = 1.0
    duration: float = 40.0
    dt: float = 0.02

    def __post_init__(self):
        if not self.ego_v0 >= 0:
            raise ValidationError("ego_v0 must be >= 0")
        if self.lead_present and not self.lead_gap0 > 0:
            raise ValidationError("lead_gap0 must be > 0 when a lead is present")
        if not self.dt > 0:
            raise ValidationError("dt must be > 0")
        if not self.duration >= 10.0:
            raise ValidationError("duration must be >= 10 s")
        if self.lead_maneuver not in MANEUVERS:
            raise ValidationError(f"unknown lead maneuver {self.lead_maneuver!r}")
        if self.rain_intensity < 0:
            raise ValidationError("rain_intensity must be >= 0")

    @property
    def friction_scale(self) -> float:
        return max(0.4, 1.0 - 0.03 * self.rain_intensity)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def row(self) -> np.ndarray:
        return np.array([
            self.ego_v0, self.ego_v_set, float(self.lead_present), self.lead_gap0, self.lead_v0,
            MANEUVERS[self.lead_maneuver], self.maneuver_start, self.maneuver_magnitude,
            self.friction_scale * self.brake_scale, self.sensor_scale,
        ])


@dataclass(frozen=True)
class AccParameters:
    k_gap: float = 0.25
    k_rel: float = 0.8
    k_v: float = 0.4
    tau: float = 1.8
    d_min: float = 2.0
    a_min: float = -6.0
    a_max: float = 2.5
    sensor_range: float = 150.0

    def __post_init__(self):
        if not self.a_min < 0 < self.a_max:
            raise ValidationError("need a_min < 0 < a_max")
        if not (self.tau > 0 and self.d_min > 0 and self.sensor_range > 0):
            raise ValidationError("tau, d_min and sensor_range must be > 0")


@dataclass(frozen=True)
class Controller:
    """An ACC instance: nominal gains and limits plus fault-injection knobs.

    With all knobs at their defaults it behaves exactly like the nominal
    controller built from the same :class:`AccParameters`.
    """

    k_gap: float
    k_rel: float
    k_v: float
    tau: float
    d_min: float
    a_min: float
    a_max: float
    sensor_range: float
    gap_sign: float = 1.0
    rel_sign: float = 1.0
    speed_sign: float = 1.0
    stuck: Optional[float] = None
    v_set_scale: float = 1.0
    detection_offset: float = 0.0

    @classmethod
    def nominal(cls, acc: AccParameters = AccParameters()) -> "Controller":
        return cls(**asdict(acc))

    def row(self) -> np.ndarray:
        return np.array([
            self.k_gap, self.k_rel, self.k_v, self.tau, self.d_min, self.a_min, self.a_max,
            self.sensor_range, self.gap_sign, self.rel_sign, self.speed_sign,
            0.0 if self.stuck is None else 1.0, 0.0 if self.stuck is None else self.stuck,
            self.v_set_scale, self.detection_offset,
        ])

    def bounds(self, brake_factor: float = 1.0) -> tuple[float, float]:
        lo_b = self.a_min * brake_factor
        return min(lo_b, self.a_max), max(lo_b, self.a_max)


# ---------------------------------------------------------------------------
# parameter bindings

_FIELD_UNITS = {
    "ego_v0": {"km/h": KMH, "m/s": 1.0},
    "ego_v_set": {"km/h": KMH, "m/s": 1.0},
    "lead_v0": {"km/h": KMH, "m/s": 1.0},
    "lead_gap0": {"m": 1.0},
    "maneuver_start": {"s": 1.0},
    "maneuver_magnitude": {"m/s^2": 1.0, "m/s2": 1.0},
    "rain_intensity": {"mm/h": 1.0},
    "duration": {"s": 1.0},
}
_SCALE_FIELDS = ("brake_scale", "sensor_scale")
_SETUP_FIELDS = {f.name for f in fields(ScenarioSetup)}


@dataclass(frozen=True)
class Bindings:
    """Maps feature-model parameters and features onto :class:`ScenarioSetup` fields.

    ``parameters[pid]`` is either ``{"field", "unit"}`` for a continuous
    value or ``{"field", "factors": {value: x}}`` for a discrete one (only
    ``*_scale`` fields). ``features[name]`` is a mapping of setup fields to
    values; ``*_scale`` entries multiply, everything else assigns.
    """

    parameters: Mapping[str, Mapping[str, Any]]
    features: Mapping[str, Mapping[str, Any]]
    defaults: Mapping[str, Any]

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Bindings":
        params = dict(doc.get("parameters", {}))
        feats = dict(doc.get("features", {}))
        defaults = dict(doc.get("defaults", {}))
        for pid, b in params.items():
            fld = b.get("field")
            if fld not in _SETUP_FIELDS:
                raise ValidationError(f"binding for {pid!r} targets unknown field {fld!r}")
            if "factors" in b:
                if fld not in _SCALE_FIELDS:
                    raise ValidationError(f"discrete binding for {pid!r} must target a *_scale field")
            elif b.get("unit") not in _FIELD_UNITS.get(fld, {}):
                raise ValidationError(f"binding for {pid!r}: unit {b.get('unit')!r} not accepted by {fld}")
        for name, assigns in feats.items():
            for fld in assigns:
                if fld not in _SETUP_FIELDS:
                    raise ValidationError(f"feature binding {name!r} targets unknown field {fld!r}")
        for fld in defaults:
            if fld not in _SETUP_FIELDS:
                raise ValidationError(f"default for unknown field {fld!r}")
        return cls(params, feats, defaults)

    def to_dict(self) -> dict:
        return {"parameters": dict(self.parameters), "features": dict(self.features),
                "defaults": dict(self.defaults)}


def load_bindings(path) -> Bindings:
    with open(path, encoding="utf-8") as fh:
        return Bindings.from_dict(json.load(fh))


def build_setup(scenario: ConcreteScenario, bindings: Bindings) -> ScenarioSetup:
    """Bind a concrete scenario's values and selected features onto a simulator setup."""
    vals: dict[str, Any] = {"ego_v0": None, "ego_v_set": None}
    vals.update(bindings.defaults)
    scales = {f: 1.0 for f in _SCALE_FIELDS}
    for name in sorted(scenario.configuration):
        for fld, x in bindings.features.get(name, {}).items():
            if fld in _SCALE_FIELDS:
                scales[fld] *= float(x)
            else:
                vals[fld] = x
    for pid, x in scenario.values.items():
        b = bindings.parameters.get(pid)
        if b is None:
            raise ValidationError(f"parameter {pid!r} has no binding")
        unit = scenario.units.get(pid)
        if unit is not None and unit != b["unit"]:
            raise ValidationError(f"unit mismatch for {pid!r}: scenario uses {unit!r}, binding {b['unit']!r}")
        if not math.isfinite(x):
            raise ValidationError(f"parameter {pid!r} is not finite")
        vals[b["field"]] = x * _FIELD_UNITS[b["field"]][b["unit"]]
    for pid, value in scenario.discrete_values.items():
        b = bindings.parameters.get(pid)
        if b is None:
            continue
        factors = b.get("factors", {})
        if value not in factors:
            raise ValidationError(f"binding for {pid!r} has no factor for value {value!r}")
        scales[b["field"]] *= float(factors[value])
    if vals["ego_v0"] is None:
        raise ValidationError("no binding provides ego_v0")
    if vals["ego_v_set"] is None:
        vals["ego_v_set"] = vals["ego_v0"]
    vals.update(scales)
    return ScenarioSetup(**vals)


def with_dt(setup: ScenarioSetup, dt: float) -> ScenarioSetup:
    return replace(setup, dt=dt)
