import json
import statistics

import pytest

from semiconcrete.errors import ValidationError
from semiconcrete.experiment import (
    DATA_DIR,
    ExperimentPlan,
    ExperimentResult,
    comparisons,
    derive_seed,
    load_plan,
    load_result,
    run,
)
from semiconcrete.report import boxplot_data, comparisons_from_csv, report, to_csv, to_markdown


@pytest.fixture(scope="module")
def small_result():
    plan = ExperimentPlan(t_values=(1,), repetitions=3, mutant_count=10, master_seed=5)
    return run(plan)


def test_single_cell():
    r = run(ExperimentPlan(strategies=("parameter_range",), t_values=(1,), feedback_modes=("off",),
                           repetitions=1, mutant_count=5))
    assert len(r.cells) == 1 and r.comparisons == []
    c = r.cells[0]
    assert 0 <= c.mutation_score <= 1 and c.resample_attempts == 0 and c.simulations == c.suite_size


def test_cell_layout(small_result):
    r = small_result
    assert len(r.cells) == 1 + 2 * 2 * 3
    base = [c for c in r.cells if c.strategy == "expert_baseline"]
    assert len(base) == 1
    for c in r.cells:
        overhead = c.simulations - c.suite_size
        assert overhead == c.resample_attempts >= 0
        if not c.feedback:
            assert overhead == 0 and c.irrelevant == 0
        assert c.valid_tests <= c.suite_size


def test_shared_mutants_and_provenance(small_result):
    prov = small_result.provenance
    assert len(prov["mutants"]) == 10
    assert prov["master_seed"] == 5 and len(prov["model_hash"]) == 64
    assert prov["polarity_mode"] == "both_polarities"


def test_deterministic_bytes(small_result):
    again = run(ExperimentPlan(t_values=(1,), repetitions=3, mutant_count=10, master_seed=5))
    assert again.to_json() == small_result.to_json()


def test_result_roundtrip(tmp_path, small_result):
    p = tmp_path / "r.json"
    p.write_text(small_result.to_json())
    assert load_result(p).to_json() == small_result.to_json()


def test_comparison_rows(small_result):
    qs = [(r.question, r.reference, r.treatment) for r in small_result.comparisons]
    assert len([q for q in qs if q[0] == "RQ1"]) == 4
    assert len([q for q in qs if q[0] == "RQ2"]) == 2
    assert len([q for q in qs if q[0] == "RQ3"]) == 2
    # the single baseline score is replicated to the repetition count
    rq1 = small_result.comparisons[0]
    assert rq1.reference == "expert_baseline"
    base = small_result.scores("expert_baseline", 1, False)[0]
    treat = [c for c in small_result.cells if (c.strategy, c.feedback) == ("parameter_range", False)]
    assert rq1.result.a12 == pytest.approx(
        sum((c.mutation_score > base) + 0.5 * (c.mutation_score == base) for c in treat) / len(treat))


def test_stats_recomputable_from_csv(small_result):
    again = comparisons_from_csv(to_csv(small_result))
    assert again == small_result.comparisons


def test_seeds():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert derive_seed(1, "a", 2) != derive_seed(1, "a", 3) != derive_seed(2, "a", 2)
    assert 0 <= derive_seed(0) < 2**63


def test_plan_validation(tmp_path):
    for bad in (dict(repetitions=0), dict(strategies=()), dict(t_values=(3,)), dict(strategies=("random",)),
                dict(feedback_modes=("maybe",))):
        with pytest.raises(ValidationError):
            ExperimentPlan(**bad)
    (tmp_path / "p.json").write_text(json.dumps({"repetitions": 2, "colour": "red"}))
    with pytest.raises(ValidationError, match="colour"):
        load_plan(tmp_path / "p.json")


def test_shipped_plan_resolves_paths():
    plan = load_plan(f"{DATA_DIR}/plan.json")
    assert plan.model.endswith("example_model.json") and plan.repetitions == 10 and plan.mutant_count == 50


def test_csv_markdown_svg(tmp_path, small_result):
    one = ExperimentResult(small_result.plan, small_result.cells[:1], [], {})
    assert len(to_csv(one).strip().splitlines()) == 2
    md = to_markdown(small_result)
    assert md.count("| 1 | RQ") == len(small_result.comparisons)
    path = report(small_result, "svg_boxplot", tmp_path / "fig" / "b.svg", hide_outliers=True)
    text = open(path).read()
    assert text.startswith("<?xml") and "<svg" in text
    assert report(small_result, "svg_boxplot", tmp_path / "c.svg", hide_outliers=True) and \
        open(tmp_path / "c.svg").read() == text
    with pytest.raises(ValidationError):
        report(small_result, "pdf", tmp_path / "x")


def test_outlier_filter_is_display_only(small_result):
    shown = boxplot_data(small_result, hide_outliers=True)
    full = boxplot_data(small_result, hide_outliers=False)
    for (label, s_shown), (_, s_full) in zip(shown[1], full[1]):
        assert s_shown == [x for x in s_full if x >= 0.5]
    # statistics ignore the display filter
    assert comparisons(small_result.cells) == small_result.comparisons


def test_unwritable_path(small_result, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    from semiconcrete.errors import SemiConcreteError
    with pytest.raises(SemiConcreteError):
        report(small_result, "csv", blocker / "sub" / "r.csv")


def test_baseline_invariance(small_result):
    base = [c.mutation_score for c in small_result.cells if c.strategy == "expert_baseline"]
    assert len(set(base)) == 1
    assert statistics.median(base) == base[0]
