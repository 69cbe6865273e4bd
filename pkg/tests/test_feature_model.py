import itertools
import json

import pytest
from hypothesis import given, settings, strategies as st

from semiconcrete.errors import ModelError, ValidationError
from semiconcrete.feature_model import (
    complete,
    enumerate_valid,
    is_valid,
    parse_model,
    satisfiable_with,
    serialize,
    to_document,
)
from semiconcrete.hybrid import derive_semi_concrete

from conftest import EGO_MODEL, random_model


def leaf(name, optional=False, **kw):
    return {"name": name, "kind": "structure", "optional": optional, "group": "and", "children": [], **kw}


def doc(root, constraints=()):
    return {"name": "m", "root": root, "constraints": list(constraints)}


# ---------------------------------------------------------------- parse_model


def test_minimal_document():
    m = parse_model({"root": leaf("Scenario")})
    assert len(m) == 1 and m.constraints == ()


def test_ego_model_excerpt(ego_model):
    assert len(ego_model) >= 4
    assert ego_model["Rain"].optional is True
    assert ego_model["InitialVelocity"].optional is False


def test_subrange_gap_rejected():
    d = json.loads(json.dumps(EGO_MODEL))
    d["root"]["children"][0]["children"][0]["parameter"]["sub_ranges"] = [
        {"lo": 0, "hi": 100, "expert_value": 50}, {"lo": 150, "hi": 210, "expert_value": 180}]
    with pytest.raises(ModelError, match="sub-ranges do not tile parameter range") as e:
        parse_model(d)
    assert "InitialVelocity" in str(e.value)


@pytest.mark.parametrize("subs, msg", [
    ([[0, 120, 60], [100, 210, 150]], "overlap"),
    ([[0, 100, 150], [100, 210, 150]], "expert"),
    ([[0, 100, 50], [100, 200, 150]], "tile"),
])
def test_malformed_subranges(subs, msg):
    d = json.loads(json.dumps(EGO_MODEL))
    d["root"]["children"][0]["children"][0]["parameter"]["sub_ranges"] = [
        {"lo": a, "hi": b, "expert_value": e} for a, b, e in subs]
    with pytest.raises(ModelError, match=msg):
        parse_model(d)


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: d["root"].pop("name"), "missing field 'name'"),
    (lambda d: d["root"].__setitem__("optional", "yes"), "wrong type"),
    (lambda d: d["root"]["children"].append(leaf("Ego")), "duplicate"),
    (lambda d: d["constraints"].append({"kind": "requires", "lhs": "Rain", "rhs": "Snow"}), "unknown feature"),
    (lambda d: d["constraints"].append({"kind": "implies", "lhs": "Rain", "rhs": "Ego"}), "constraint kind"),
    (lambda d: d["constraints"].append({"kind": "requires", "lhs": "Rain", "rhs": "Rain"}), "itself"),
    (lambda d: d["root"].__setitem__("group", "xor"), "group"),
    (lambda d: d["root"].__setitem__("kind", "abstract"), "kind"),
])
def test_schema_violations(mutate, msg):
    d = json.loads(json.dumps(EGO_MODEL))
    mutate(d)
    with pytest.raises(ModelError, match=msg):
        parse_model(d)


def test_group_needs_two_children():
    with pytest.raises(ModelError, match="Type"):
        parse_model(doc({**leaf("Root"), "children": [{**leaf("Type"), "group": "alternative",
                                                       "children": [leaf("A")]}]}))


def test_concrete_must_be_leaf_and_parameters_only_on_logical():
    bad_concrete = {**leaf("C"), "kind": "concrete", "children": [leaf("X")]}
    with pytest.raises(ModelError, match="C"):
        parse_model(doc({**leaf("Root"), "children": [bad_concrete]}))
    bad_param = {**leaf("S"), "parameter": {"id": "p", "type": "discrete", "values": ["a"]}}
    with pytest.raises(ModelError, match="S"):
        parse_model(doc({**leaf("Root"), "children": [bad_param]}))


def test_discrete_values_distinct_and_nonempty():
    for values in ([], ["a", "a"]):
        p = {**leaf("P"), "kind": "logical", "parameter": {"id": "p", "type": "discrete", "values": values}}
        with pytest.raises(ModelError, match="P"):
            parse_model(doc({**leaf("Root"), "children": [p]}))


def test_continuous_range_ordering():
    p = {**leaf("P"), "kind": "logical", "parameter": {"id": "p", "type": "continuous", "range": [5, 5]}}
    with pytest.raises(ModelError, match="P"):
        parse_model(doc({**leaf("Root"), "children": [p]}))


def test_invalid_json_text():
    with pytest.raises(ValidationError):
        parse_model("{not json")


def test_roundtrip_example(example_model):
    assert parse_model(serialize(example_model)) == example_model
    assert parse_model(to_document(example_model)).digest == example_model.digest


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 20), st.booleans())
def test_roundtrip_random(seed, n, params):
    m = random_model(seed, n, 3, params)
    assert parse_model(serialize(m)) == m
    sc = derive_semi_concrete(m)
    assert parse_model(serialize(sc)) == sc


# ---------------------------------------------------------------- is_valid


def test_is_valid_basics(ego_model):
    assert not is_valid(ego_model, set())
    full = {"Scenario", "Ego", "InitialVelocity", "Type"}
    assert is_valid(ego_model, full)
    assert not is_valid(ego_model, full - {"Type"})
    assert is_valid(ego_model, full | {"Rain"})


def test_is_valid_unknown_name(ego_model):
    with pytest.raises(ModelError, match="Snow"):
        is_valid(ego_model, {"Scenario", "Snow"})


def test_is_valid_excludes():
    m = parse_model(doc({**leaf("R"), "children": [leaf("A", True), leaf("B", True)]},
                        [{"kind": "excludes", "lhs": "A", "rhs": "B"}]))
    assert not is_valid(m, {"R", "A", "B"})
    assert is_valid(m, {"R", "A"})


def test_is_valid_pure(example_model):
    cfg = complete(example_model)
    assert all(is_valid(example_model, cfg) for _ in range(5))


def test_is_valid_group_semantics():
    m = parse_model(doc({**leaf("R"), "children": [
        {**leaf("Alt"), "group": "alternative", "children": [leaf("A1"), leaf("A2")]},
        {**leaf("Or", True), "group": "or", "children": [leaf("O1"), leaf("O2")]},
    ]}))
    assert is_valid(m, {"R", "Alt", "A1"})
    assert not is_valid(m, {"R", "Alt", "A1", "A2"})
    assert not is_valid(m, {"R", "Alt"})
    assert not is_valid(m, {"R", "Alt", "A1", "Or"})
    assert is_valid(m, {"R", "Alt", "A2", "Or", "O1", "O2"})
    assert not is_valid(m, {"R", "Alt", "A2", "O1"})  # child without parent


# ---------------------------------------------------------------- enumerate_valid


def test_enumerate_small_cases():
    one = parse_model(doc({**leaf("R"), "children": [leaf("A", True)]}))
    assert len(enumerate_valid(one)) == 2
    alt = parse_model(doc({**leaf("R"), "group": "alternative", "children": [leaf("A"), leaf("B"), leaf("C")]}))
    assert len(enumerate_valid(alt)) == 3


def test_enumerate_ego_model_expanded(ego_model):
    # only Type is expanded here: 3 types x rain on/off
    sc = derive_semi_concrete(ego_model)
    assert len(enumerate_valid(sc)) == 6


def test_enumerate_order_and_cap():
    m = parse_model(doc({**leaf("R"), "children": [leaf("A", True), leaf("B", True), leaf("C", True)]}))
    cfgs = enumerate_valid(m)
    vecs = [tuple(n in c for n in m.names) for c in cfgs]
    assert vecs == sorted(vecs) and len(set(vecs)) == 8
    with pytest.raises(ModelError, match="more than"):
        enumerate_valid(m, cap=5)


def test_enumerate_too_large(example_model):
    with pytest.raises(ModelError, match="at most"):
        enumerate_valid(derive_semi_concrete(example_model))


def _truth_table(m):
    """Independent oracle: test every subset of the feature set with is_valid."""
    names = m.names
    out = []
    for bits in itertools.product((False, True), repeat=len(names)):
        cfg = frozenset(n for n, b in zip(names, bits) if b)
        if is_valid(m, cfg):
            out.append(cfg)
    return out


@pytest.mark.parametrize("seed", range(15))
def test_enumerate_matches_truth_table(seed):
    m = random_model(seed, 10, 3)
    assert set(enumerate_valid(m)) == set(_truth_table(m))


# ---------------------------------------------------------------- satisfiable_with


def test_satisfiable_with_examples(ego_model):
    sc = derive_semi_concrete(ego_model)
    assert satisfiable_with(sc, [])
    assert not satisfiable_with(sc, [("type_A4", True), ("type_X5", True)])
    assert satisfiable_with(sc, [("Rain", True), ("type_A4", True)])
    with pytest.raises(ModelError):
        satisfiable_with(sc, [("Snow", True)])


def _agrees(m):
    cfgs = enumerate_valid(m)
    lits = [(n, p) for n in m.names for p in (True, False)]

    def brute(ls):
        return any(all((n in c) == p for n, p in ls) for c in cfgs)

    assert satisfiable_with(m, []) == bool(cfgs)
    for a in lits:
        assert satisfiable_with(m, [a]) == brute([a]), a
    for a, b in itertools.combinations(lits, 2):
        if a[0] == b[0]:
            continue
        assert satisfiable_with(m, [a, b]) == brute([a, b]), (a, b)


@pytest.mark.parametrize("seed", range(20))
def test_satisfiable_with_agrees_with_brute_force(seed):
    _agrees(random_model(seed, 4 + seed % 17, 1 + seed % 4))


def test_complete_returns_valid(example_model):
    cfg = complete(example_model, [("Rain", True), ("Night", True)])
    assert is_valid(example_model, cfg) and {"Rain", "Night"} <= cfg
    assert complete(example_model, [("Fog", True), ("Night", True)]) is None
