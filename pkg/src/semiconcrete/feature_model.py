"""Constrained feature models: parsing, validation and configuration queries.

A model is a tree of features. Every feature governs its children with one
group type (``and``, ``or``, ``alternative``); inside an ``and`` group the
``optional`` flag of each child decides mandatory vs optional. Cross-tree
constraints are binary ``requires`` / ``excludes`` relations.

Configurations are plain ``frozenset`` objects of selected feature names.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Optional, Union

from ._solver import Solver
from .errors import ModelError

Configuration = frozenset  # frozenset[str] of selected feature names
Literal = tuple  # (feature name, polarity)

KINDS = ("structure", "logical", "concrete")
GROUPS = ("and", "or", "alternative")
CONSTRAINT_KINDS = ("requires", "excludes")

# Hard ceiling on raw (pre-constraint) tree configurations walked by the
# brute-force enumerator.
_ENUMERATION_LIMIT = 1 << 20


@dataclass(frozen=True)
class SubRange:
    lo: float
    hi: float
    expert_value: Optional[float] = None

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class ParameterSpec:
    id: str
    type: str  # "continuous" | "discrete"
    unit: str = ""
    range: Optional[tuple[float, float]] = None
    values: tuple[str, ...] = ()
    sub_ranges: tuple[SubRange, ...] = ()

    @property
    def continuous(self) -> bool:
        return self.type == "continuous"

    @property
    def lo(self) -> float:
        return self.range[0]

    @property
    def hi(self) -> float:
        return self.range[1]


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = "structure"
    optional: bool = False
    group: str = "and"
    children: tuple["Feature", ...] = ()
    parameter: Optional[ParameterSpec] = None
    # Set on features created by model derivation: which parameter value
    # (discrete) or sub-range index (continuous) this concrete feature fixes.
    binding: Optional[Mapping[str, Any]] = field(default=None, compare=False, hash=False)

    def walk(self) -> Iterator["Feature"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class CrossTreeConstraint:
    kind: str
    lhs: str
    rhs: str


class FeatureModel:
    """Immutable feature tree plus cross-tree constraints.

    Construction validates all structural invariants; any violation raises
    :class:`ModelError` naming the offending feature.
    """

    def __init__(self, root: Feature, constraints: Iterable[CrossTreeConstraint] = (), name: str = "model"):
        self.name = name
        self.root = root
        self.constraints = tuple(constraints)
        self.features: tuple[Feature, ...] = tuple(root.walk())
        self.index: dict[str, int] = {}
        self.parent: dict[str, Optional[str]] = {root.name: None}
        for i, f in enumerate(self.features):
            if f.name in self.index:
                raise ModelError("duplicate feature name", f.name)
            self.index[f.name] = i
            for c in f.children:
                self.parent[c.name] = f.name
        for f in self.features:
            _check_feature(f)
        if root.optional:
            raise ModelError("root feature cannot be optional", root.name)
        for c in self.constraints:
            if c.kind not in CONSTRAINT_KINDS:
                raise ModelError(f"unknown constraint kind {c.kind!r}", c.lhs)
            for side in (c.lhs, c.rhs):
                if side not in self.index:
                    raise ModelError("constraint references unknown feature", side)
            if c.lhs == c.rhs:
                raise ModelError("constraint relates a feature to itself", c.lhs)

    def __getitem__(self, name: str) -> Feature:
        return self.features[self.index[name]]

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def __len__(self) -> int:
        return len(self.features)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureModel):
            return NotImplemented
        return to_document(self) == to_document(other)

    def __hash__(self):
        return hash(self.digest)

    def __repr__(self) -> str:
        return f"FeatureModel({self.name!r}, features={len(self)}, constraints={len(self.constraints)})"

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def parameters(self) -> list[tuple[Feature, ParameterSpec]]:
        return [(f, f.parameter) for f in self.features if f.parameter is not None]

    @cached_property
    def digest(self) -> str:
        text = json.dumps(to_document(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @cached_property
    def solver(self) -> Solver:
        return Solver(len(self.features), self.clauses())

    def clauses(self) -> list[tuple[int, ...]]:
        """CNF encoding; feature ``i`` in document order is variable ``i + 1``."""
        var = {n: i + 1 for n, i in self.index.items()}
        out: list[tuple[int, ...]] = [(var[self.root.name],)]
        for f in self.features:
            p = var[f.name]
            kids = [var[c.name] for c in f.children]
            for k in kids:
                out.append((-k, p))
            if not kids:
                continue
            if f.group == "and":
                out.extend((-p, var[c.name]) for c in f.children if not c.optional)
            else:
                out.append((-p, *kids))
                if f.group == "alternative":
                    out.extend((-a, -b) for a, b in itertools.combinations(kids, 2))
        for c in self.constraints:
            a, b = var[c.lhs], var[c.rhs]
            out.append((-a, b) if c.kind == "requires" else (-a, -b))
        return out

    def literal(self, name: str, polarity: bool) -> int:
        if name not in self.index:
            raise ModelError("unknown feature", name)
        v = self.index[name] + 1
        return v if polarity else -v

    def config_from_model(self, assignment: list[bool]) -> Configuration:
        return frozenset(f.name for f, on in zip(self.features, assignment) if on)


def _check_feature(f: Feature) -> None:
    if not isinstance(f.name, str) or not f.name:
        raise ModelError("feature name must be a non-empty string", f.name)
    if f.kind not in KINDS:
        raise ModelError(f"unknown kind {f.kind!r}", f.name)
    if f.group not in GROUPS:
        raise ModelError(f"unknown group {f.group!r}", f.name)
    if f.group in ("or", "alternative") and len(f.children) < 2:
        raise ModelError(f"{f.group} group needs at least 2 children", f.name)
    if f.kind == "concrete" and f.children:
        raise ModelError("concrete features must be leaves", f.name)
    if f.parameter is not None:
        if f.kind != "logical":
            raise ModelError("only logical features may carry a parameter", f.name)
        _check_parameter(f.parameter, f.name)


def _check_parameter(p: ParameterSpec, owner: str) -> None:
    if p.type == "continuous":
        if p.range is None or len(p.range) != 2:
            raise ModelError("continuous parameter needs range [lo, hi]", owner)
        lo, hi = p.range
        if not lo < hi:
            raise ModelError("parameter range needs lo < hi", owner)
        if p.values:
            raise ModelError("continuous parameter cannot list values", owner)
        if p.sub_ranges:
            subs = p.sub_ranges
            for s in subs:
                if not s.lo < s.hi:
                    raise ModelError("sub-range needs lo < hi", owner)
                if s.expert_value is not None and not s.contains(s.expert_value):
                    raise ModelError(f"expert_value {s.expert_value} outside sub-range [{s.lo}, {s.hi}]", owner)
            if any(a.hi > b.lo for a, b in zip(subs, subs[1:])):
                raise ModelError("sub-ranges overlap or are out of order", owner)
            if subs[0].lo != lo or subs[-1].hi != hi or any(a.hi != b.lo for a, b in zip(subs, subs[1:])):
                raise ModelError("sub-ranges do not tile parameter range", owner)
    elif p.type == "discrete":
        if not p.values:
            raise ModelError("discrete parameter needs at least one value", owner)
        if len(set(p.values)) != len(p.values):
            raise ModelError("discrete parameter values must be distinct", owner)
        if p.range is not None or p.sub_ranges:
            raise ModelError("discrete parameter cannot carry a range", owner)
    else:
        raise ModelError(f"unknown parameter type {p.type!r}", owner)


# ---------------------------------------------------------------------------
# document format


def _expect(obj: Mapping, key: str, typ, owner: str, default=...):
    if key not in obj or obj[key] is None:
        if default is ...:
            raise ModelError(f"missing field {key!r}", owner)
        return default
    val = obj[key]
    if typ is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    else:
        ok = isinstance(val, typ)
    if not ok:
        raise ModelError(f"field {key!r} has wrong type {type(val).__name__}", owner)
    return val


def _parse_parameter(obj: Any, owner: str) -> ParameterSpec:
    if not isinstance(obj, Mapping):
        raise ModelError("parameter must be an object", owner)
    pid = _expect(obj, "id", str, owner)
    ptype = _expect(obj, "type", str, owner)
    unit = _expect(obj, "unit", str, owner, "")
    if ptype == "continuous":
        rng = _expect(obj, "range", list, owner)
        if len(rng) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in rng):
            raise ModelError("field 'range' must be [lo, hi]", owner)
        subs = []
        for s in _expect(obj, "sub_ranges", list, owner, []):
            if not isinstance(s, Mapping):
                raise ModelError("sub_ranges entries must be objects", owner)
            ev = _expect(s, "expert_value", float, owner, None)
            subs.append(SubRange(float(_expect(s, "lo", float, owner)), float(_expect(s, "hi", float, owner)),
                                 None if ev is None else float(ev)))
        return ParameterSpec(pid, ptype, unit, (float(rng[0]), float(rng[1])), (), tuple(subs))
    if ptype == "discrete":
        values = _expect(obj, "values", list, owner)
        if not all(isinstance(v, str) for v in values):
            raise ModelError("discrete values must be strings", owner)
        return ParameterSpec(pid, ptype, unit, None, tuple(values))
    raise ModelError(f"unknown parameter type {ptype!r}", owner)


def _parse_feature(obj: Any, where: str = "root") -> Feature:
    if not isinstance(obj, Mapping):
        raise ModelError("feature must be an object", where)
    name = _expect(obj, "name", str, where)
    kind = _expect(obj, "kind", str, name, "structure")
    optional = _expect(obj, "optional", bool, name, False)
    group = _expect(obj, "group", str, name, "and")
    children = tuple(_parse_feature(c, name) for c in _expect(obj, "children", list, name, []))
    param = obj.get("parameter")
    param = None if param is None else _parse_parameter(param, name)
    binding = _expect(obj, "binding", dict, name, None)
    return Feature(name, kind, optional, group, children, param, binding)


def parse_model(document: Union[str, bytes, Mapping]) -> FeatureModel:
    """Build a :class:`FeatureModel` from a JSON text or an already-decoded object."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError(f"not valid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise ModelError("document must be an object")
    root = _parse_feature(_expect(document, "root", dict, "document"))
    name = _expect(document, "name", str, "document", root.name)
    constraints = []
    for c in _expect(document, "constraints", list, "document", []):
        if not isinstance(c, Mapping):
            raise ModelError("constraints entries must be objects", "document")
        constraints.append(CrossTreeConstraint(_expect(c, "kind", str, "constraint"),
                                               _expect(c, "lhs", str, "constraint"),
                                               _expect(c, "rhs", str, "constraint")))
    return FeatureModel(root, constraints, name)


def load_model(path) -> FeatureModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def _parameter_doc(p: ParameterSpec) -> dict:
    if p.continuous:
        doc = {"id": p.id, "type": p.type, "unit": p.unit, "range": list(p.range)}
        if p.sub_ranges:
            doc["sub_ranges"] = [{"lo": s.lo, "hi": s.hi, "expert_value": s.expert_value} for s in p.sub_ranges]
        return doc
    return {"id": p.id, "type": p.type, "unit": p.unit, "values": list(p.values)}


def _feature_doc(f: Feature) -> dict:
    doc = {"name": f.name, "kind": f.kind, "optional": f.optional, "group": f.group,
           "children": [_feature_doc(c) for c in f.children],
           "parameter": None if f.parameter is None else _parameter_doc(f.parameter)}
    if f.binding is not None:
        doc["binding"] = dict(f.binding)
    return doc


def to_document(model: FeatureModel) -> dict:
    return {"name": model.name, "root": _feature_doc(model.root),
            "constraints": [{"kind": c.kind, "lhs": c.lhs, "rhs": c.rhs} for c in model.constraints]}


def serialize(model: FeatureModel, indent: Optional[int] = 2) -> str:
    return json.dumps(to_document(model), indent=indent)


# ---------------------------------------------------------------------------
# configuration semantics


def _check_names(model: FeatureModel, names: Iterable[str]) -> None:
    for n in names:
        if n not in model.index:
            raise ModelError("unknown feature in configuration", n)


def is_valid(model: FeatureModel, cfg: Iterable[str]) -> bool:
    cfg = frozenset(cfg)
    _check_names(model, cfg)
    if model.root.name not in cfg:
        return False
    for f in model.features:
        if f.name not in cfg:
            continue
        parent = model.parent[f.name]
        if parent is not None and parent not in cfg:
            return False
        if not f.children:
            continue
        picked = sum(c.name in cfg for c in f.children)
        if f.group == "and":
            if any(not c.optional and c.name not in cfg for c in f.children):
                return False
        elif f.group == "alternative":
            if picked != 1:
                return False
        elif picked < 1:
            return False
    for c in model.constraints:
        if c.lhs in cfg:
            if c.kind == "requires" and c.rhs not in cfg:
                return False
            if c.kind == "excludes" and c.rhs in cfg:
                return False
    return True


def _subtree_configs(f: Feature) -> Iterator[tuple[str, ...]]:
    """All selections of *f*'s subtree given that *f* itself is selected."""
    kids = f.children
    if not kids:
        yield (f.name,)
        return
    if f.group == "and":
        options = [list(_subtree_configs(c)) + ([()] if c.optional else []) for c in kids]
        for combo in itertools.product(*options):
            yield (f.name,) + tuple(itertools.chain.from_iterable(combo))
    elif f.group == "alternative":
        for c in kids:
            for sub in _subtree_configs(c):
                yield (f.name,) + sub
    else:
        options = [list(_subtree_configs(c)) + [()] for c in kids]
        for combo in itertools.product(*options):
            if any(combo):
                yield (f.name,) + tuple(itertools.chain.from_iterable(combo))


def _raw_count(f: Feature) -> int:
    if not f.children:
        return 1
    counts = [_raw_count(c) for c in f.children]
    if f.group == "and":
        total = 1
        for c, n in zip(f.children, counts):
            total *= n + (1 if c.optional else 0)
        return total
    if f.group == "alternative":
        return sum(counts)
    total = 1
    for n in counts:
        total *= n + 1
    return total - 1


def enumerate_valid(model: FeatureModel, cap: int = 100_000, max_features: int = 30) -> list[Configuration]:
    """Brute-force all valid configurations (test oracle for small models).

    Walks the tree's own group semantics and filters cross-tree constraints
    through :func:`is_valid`; it shares no code with the SAT encoding.
    Results are ordered lexicographically by the 0/1 selection vector in
    document order.
    """
    if len(model) > max_features:
        raise ModelError(f"model has {len(model)} features; enumeration supports at most {max_features}")
    if _raw_count(model.root) > _ENUMERATION_LIMIT:
        raise ModelError("model too large for brute-force enumeration")
    found = []
    for sel in _subtree_configs(model.root):
        cfg = frozenset(sel)
        if is_valid(model, cfg):
            found.append(cfg)
            if len(found) > cap:
                raise ModelError(f"more than {cap} valid configurations")
    order = model.names
    found.sort(key=lambda c: tuple(n in c for n in order))
    return found


def satisfiable_with(model: FeatureModel, literals: Iterable[tuple[str, bool]]) -> bool:
    """True iff some valid configuration agrees with every (feature, polarity) literal."""
    lits = [model.literal(n, bool(p)) for n, p in literals]
    return model.solver.solve(lits) is not None


def complete(model: FeatureModel, literals: Iterable[tuple[str, bool]] = ()) -> Optional[Configuration]:
    """A valid configuration consistent with *literals*, or ``None``."""
    lits = [model.literal(n, bool(p)) for n, p in literals]
    sol = model.solver.solve(lits)
    return None if sol is None else model.config_from_model(sol)
