"""Shared fixtures and a seeded generator of small random feature models."""

from __future__ import annotations

import random
import sys

import pytest

from semiconcrete.experiment import EXAMPLE_BINDINGS, EXAMPLE_MODEL
from semiconcrete.feature_model import (
    CrossTreeConstraint,
    Feature,
    FeatureModel,
    ParameterSpec,
    SubRange,
    load_model,
    parse_model,
)
from semiconcrete.sim.setup import load_bindings


def random_model(
    seed: int,
    n_features: int = 12,
    n_constraints: int = 2,
    parameters: bool = False,
) -> FeatureModel:
    """A random tree of exactly *n_features* features plus binary constraints.

    With ``parameters=True`` some leaves become logical features carrying a
    discrete (1-3 values) or continuous (1-3 sub-ranges) parameter.
    """
    rng = random.Random(seed)
    names = [f"F{i}" for i in range(n_features)]
    # random parent assignment in preorder-compatible order
    kids: dict[int, list[int]] = {i: [] for i in range(n_features)}
    for i in range(1, n_features):
        kids[rng.randrange(i)].append(i)
    pcount = [0]

    def build(i: int, optional: bool) -> Feature:
        ch = kids[i]
        if not ch:
            param = None
            kind = "structure"
            if parameters and rng.random() < 0.4:
                kind = "logical"
                pcount[0] += 1
                pid = f"p{pcount[0]}"
                if rng.random() < 0.5:
                    k = rng.randint(1, 3)
                    param = ParameterSpec(pid, "discrete", "", None, tuple(f"v{j}" for j in range(k)))
                else:
                    k = rng.randint(1, 3)
                    edges = sorted(rng.sample(range(1, 100), k - 1))
                    cuts = [0.0] + [float(e) for e in edges] + [100.0]
                    subs = tuple(SubRange(a, b, (a + b) / 2) for a, b in zip(cuts, cuts[1:]))
                    param = ParameterSpec(pid, "continuous", "m", (0.0, 100.0), (), subs)
            return Feature(names[i], kind, optional, "and", (), param)
        if len(ch) >= 2:
            group = rng.choice(["and", "and", "or", "alternative"])
        else:
            group = "and"
        children = tuple(build(c, group == "and" and rng.random() < 0.5) for c in ch)
        return Feature(names[i], "structure", optional, group, children)

    root = build(0, False)
    constraints = []
    seen = set()
    for _ in range(n_constraints):
        if n_features < 3:
            break
        a, b = rng.sample(range(1, n_features), 2)
        if (a, b) in seen:
            continue
        seen.add((a, b))
        constraints.append(CrossTreeConstraint(rng.choice(["requires", "excludes"]), names[a], names[b]))
    return FeatureModel(root, constraints, f"random{seed}")


EGO_MODEL = {
    "name": "ego_model",
    "root": {
        "name": "Scenario", "kind": "structure", "optional": False, "group": "and",
        "children": [
            {"name": "Ego", "kind": "structure", "optional": False, "group": "and", "children": [
                {"name": "InitialVelocity", "kind": "logical", "optional": False, "group": "and",
                 "parameter": {"id": "velocity", "type": "continuous", "unit": "km/h", "range": [0, 210],
                               "sub_ranges": [{"lo": 0, "hi": 70, "expert_value": 35},
                                              {"lo": 70, "hi": 140, "expert_value": 105},
                                              {"lo": 140, "hi": 210, "expert_value": 175}]}},
                {"name": "Type", "kind": "logical", "optional": False, "group": "and",
                 "parameter": {"id": "type", "type": "discrete", "values": ["A4", "Beetle", "X5"]}},
            ]},
            {"name": "Rain", "kind": "structure", "optional": True, "group": "and", "children": []},
        ],
    },
    "constraints": [],
}


@pytest.fixture(scope="session")
def ego_model():
    return parse_model(EGO_MODEL)


@pytest.fixture(scope="session")
def example_model():
    return load_model(EXAMPLE_MODEL)


@pytest.fixture(scope="session")
def bindings():
    return load_bindings(EXAMPLE_BINDINGS)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
