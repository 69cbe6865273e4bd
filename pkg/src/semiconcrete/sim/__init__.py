"""Desk-scale longitudinal ACC simulator."""

from .core import (
    ORACLES,
    OracleTolerances,
    OracleVerdict,
    RelevanceChecker,
    SimulationTrace,
    evaluate_oracles,
    is_relevant,
    nominal_scenarios,
    passes,
    run_verdicts,
    simulate,
    simulate_many,
)
from .setup import AccParameters, Bindings, Controller, ScenarioSetup, build_setup, load_bindings

__all__ = [
    "ORACLES", "OracleTolerances", "OracleVerdict", "RelevanceChecker", "SimulationTrace",
    "evaluate_oracles", "is_relevant", "nominal_scenarios", "passes", "run_verdicts", "simulate",
    "simulate_many", "AccParameters", "Bindings", "Controller", "ScenarioSetup", "build_setup",
    "load_bindings",
]
