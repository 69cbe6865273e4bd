"""Command line interface.

Exit codes: 0 success, 2 validation error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .concretize import Strategy, concretize_suite, save_outcomes, load_scenarios, total_attempts
from .errors import SemiConcreteError, ValidationError
from .experiment import EXAMPLE_BINDINGS, EXAMPLE_MODEL, ExperimentPlan, load_plan, load_result, run, trend_warnings
from .feature_model import enumerate_valid, load_model
from .hybrid import AbstractionLevel, derive, lift
from .mutation import CATALOG_SIZE, generate_mutants, save_mutants
from .report import report
from .sampling import SamplingConfig, load_suite, sample, save_suite
from .sim.core import RelevanceChecker, evaluate_oracles, is_relevant, passes, simulate
from .sim.setup import build_setup, load_bindings

log = logging.getLogger("semiconcrete")


def _model_stats(args):
    logical = load_model(args.model)
    out = {"name": logical.name, "features": len(logical), "constraints": len(logical.constraints)}
    kinds = {}
    for f in logical.features:
        kinds[f.kind] = kinds.get(f.kind, 0) + 1
    out["kinds"] = kinds
    params = logical.parameters()
    out["continuous_parameters"] = sum(p.continuous for _, p in params)
    out["discrete_parameters"] = sum(not p.continuous for _, p in params)
    out["sub_ranges"] = sum(len(p.sub_ranges) for _, p in params)
    for level in (AbstractionLevel.SEMI_CONCRETE, AbstractionLevel.CONCRETE):
        try:
            out[f"{level.value}_features"] = len(derive(logical, level))
        except ValidationError as exc:
            out[f"{level.value}_features"] = f"n/a ({exc})"
    if len(logical) <= 30:
        try:
            out["valid_configurations"] = len(enumerate_valid(logical))
        except ValidationError:
            pass
    print(json.dumps(out, indent=1))


def _model_validate(args):
    m = load_model(args.model)
    print(f"ok: {m.name} ({len(m)} features, {len(m.constraints)} constraints)")


def _sample(args):
    logical = load_model(args.model)
    level = AbstractionLevel(args.level)
    model = derive(logical, level)
    cfg = SamplingConfig(t=args.t, seed=args.seed, polarity_mode=args.polarity, max_configs=args.max_configs)
    suite = sample(model, cfg)
    save_suite(args.out, model, suite, cfg, level.value)
    print(f"{len(suite)} configurations -> {args.out}")


def _concretize(args):
    logical = load_model(args.model)
    header, cfgs = load_suite(args.suite)
    level = AbstractionLevel(header.get("level", "semi_concrete"))
    model = derive(logical, level)
    if header.get("model_hash") not in (None, model.digest):
        raise ValidationError("suite was sampled from a different model")
    scns = [lift(c, model, level) for c in cfgs]
    feedback = args.feedback == "on"
    relevance = None
    if feedback or args.bindings:
        relevance = RelevanceChecker(load_bindings(args.bindings or EXAMPLE_BINDINGS))
    outcomes = concretize_suite(scns, Strategy(args.strategy, feedback=feedback, seed=args.seed), relevance)
    save_outcomes(args.out, outcomes)
    print(f"{len(outcomes)} scenarios, {total_attempts(outcomes)} attempts -> {args.out}")


def _simulate(args):
    bindings = load_bindings(args.bindings)
    scenarios = load_scenarios(args.scenarios)
    os.makedirs(args.out, exist_ok=True)
    verdicts = []
    for i, scn in enumerate(scenarios):
        setup = build_setup(scn, bindings)
        trace = simulate(setup)
        v = evaluate_oracles(trace, setup)
        trace.to_csv(os.path.join(args.out, f"trace_{i:03d}.csv"))
        verdicts.append({
            "test": i, "relevant": is_relevant(trace), "passed": passes(v),
            "oracles": {k: {"passed": o.passed, "first_violation": o.first_violation} for k, o in v.items()},
        })
    with open(os.path.join(args.out, "verdicts.json"), "w", encoding="utf-8") as fh:
        json.dump(verdicts, fh, indent=1)
    print(f"{sum(v['passed'] for v in verdicts)}/{len(verdicts)} tests pass -> {args.out}")


def _mutants(args):
    muts = generate_mutants(args.count, args.seed)
    save_mutants(args.out, muts, args.seed)
    print(f"{len(muts)} mutants (catalog size {CATALOG_SIZE}) -> {args.out}")


def _experiment_run(args):
    if args.config:
        plan = load_plan(args.config)
    else:
        plan = ExperimentPlan()
    overrides = {}
    if args.model:
        overrides["model"] = os.path.abspath(args.model)
    if args.bindings:
        overrides["bindings"] = os.path.abspath(args.bindings)
    if args.t:
        overrides["t_values"] = args.t
    if args.strategy:
        overrides["strategies"] = args.strategy
    if args.feedback:
        overrides["feedback_modes"] = args.feedback
    if args.reps is not None:
        overrides["repetitions"] = args.reps
    if args.mutants is not None:
        overrides["mutant_count"] = args.mutants
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        plan = ExperimentPlan(**{**plan.to_dict(), **overrides})

    def progress(cell):
        log.info("%s t=%d fb=%s rep=%d score=%.3f", cell.strategy, cell.t, cell.feedback, cell.repetition,
                 cell.mutation_score)

    result = run(plan, workers=args.workers, progress=progress)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "result.json"), "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
    report(result, "csv", os.path.join(args.out, "scores.csv"))
    report(result, "markdown", os.path.join(args.out, "report.md"))
    for w in trend_warnings(result):
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(result.cells)} suite evaluations -> {args.out}")


def _report(args):
    result = load_result(args.result)
    report(result, args.format, args.out, hide_outliers=args.hide_outliers)
    print(f"{args.format} -> {args.out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semiconcrete", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="inspect a feature-model document")
    msub = model.add_subparsers(dest="action", required=True)
    for name, fn in (("validate", _model_validate), ("stats", _model_stats)):
        q = msub.add_parser(name)
        q.add_argument("--model", default=EXAMPLE_MODEL)
        q.set_defaults(func=fn)

    q = sub.add_parser("sample", help="t-wise sample of a derived model layer")
    q.add_argument("--model", default=EXAMPLE_MODEL)
    q.add_argument("--t", type=int, default=2)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--level", choices=[l.value for l in AbstractionLevel], default="semi_concrete")
    q.add_argument("--polarity", choices=["both_polarities", "positive_only"], default="both_polarities")
    q.add_argument("--max-configs", type=int)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_sample)

    q = sub.add_parser("concretize", help="turn a sampled suite into concrete scenarios")
    q.add_argument("--model", default=EXAMPLE_MODEL)
    q.add_argument("--suite", required=True)
    q.add_argument("--strategy", choices=["expert_baseline", "parameter_range", "sub_parameter_range"],
                   default="parameter_range")
    q.add_argument("--feedback", choices=["off", "on"], default="off")
    q.add_argument("--bindings")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_concretize)

    q = sub.add_parser("simulate", help="run concrete scenarios on the nominal ACC")
    q.add_argument("--bindings", default=EXAMPLE_BINDINGS)
    q.add_argument("--scenarios", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_simulate)

    q = sub.add_parser("mutants", help="generate faulty ACC variants")
    q.add_argument("--count", type=int, default=50)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_mutants)

    exp = sub.add_parser("experiment", help="full strategy comparison")
    esub = exp.add_subparsers(dest="action", required=True)
    q = esub.add_parser("run")
    q.add_argument("--config")
    q.add_argument("--model")
    q.add_argument("--bindings")
    q.add_argument("--t", type=int, nargs="+")
    q.add_argument("--strategy", nargs="+")
    q.add_argument("--feedback", nargs="+", choices=["off", "on"])
    q.add_argument("--reps", type=int)
    q.add_argument("--mutants", type=int)
    q.add_argument("--seed", type=int)
    q.add_argument("--workers", type=int, default=1)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_experiment_run)

    q = sub.add_parser("report", help="render a stored experiment result")
    q.add_argument("--result", required=True)
    q.add_argument("--format", choices=["csv", "markdown", "svg_boxplot"], default="markdown")
    q.add_argument("--hide-outliers", action="store_true", help="drop scores < 0.5 from the drawing only")
    q.add_argument("--out", required=True)
    q.set_defaults(func=_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SemiConcreteError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
