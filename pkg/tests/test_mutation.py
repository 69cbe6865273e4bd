import numpy as np
import pytest

from semiconcrete.errors import ValidationError
from semiconcrete.mutation import (
    CATALOG,
    CATALOG_SIZE,
    KillMatrix,
    MutantSpec,
    apply_mutant,
    catalog_entries,
    generate_mutants,
    load_mutants,
    run_kill_matrix,
    save_mutants,
)
from semiconcrete.sim.core import nominal_scenarios, run_verdicts
from semiconcrete.sim.setup import Controller, ScenarioSetup


def test_catalog_shape():
    assert CATALOG_SIZE == len(set(catalog_entries())) == 52
    assert set(CATALOG) == {"gain_scale", "constant_shift", "sign_flip", "clamp_swap", "sensor_range_scale",
                            "stuck_output", "detection_offset"}
    assert 1.0 not in CATALOG["gain_scale"]["k_gap"]


def test_every_entry_differs_from_nominal():
    nominal = Controller.nominal()
    for i, (op, site, m) in enumerate(catalog_entries()):
        assert apply_mutant(MutantSpec(i, op, site, m)) != nominal


def test_generate_fifty_distinct_and_stable():
    a = generate_mutants(50, seed=7)
    assert len(a) == 50 and len({m.key for m in a}) == 50
    assert generate_mutants(50, seed=7) == a
    assert generate_mutants(50, seed=8) != a
    assert [m.id for m in a] == list(range(50))


def test_generate_edge_cases():
    assert len(generate_mutants(1, seed=0)) == 1
    assert len({m.key for m in generate_mutants(CATALOG_SIZE, seed=0)}) == CATALOG_SIZE
    with pytest.raises(ValidationError, match=str(CATALOG_SIZE)):
        generate_mutants(CATALOG_SIZE + 1)
    with pytest.raises(ValidationError):
        generate_mutants(0)


def test_operators_roughly_uniform():
    counts = {}
    for s in range(300):
        m = generate_mutants(1, seed=s)[0]
        counts[m.operator] = counts.get(m.operator, 0) + 1
    assert set(counts) == set(CATALOG)
    assert min(counts.values()) > 15


def test_spec_validation():
    with pytest.raises(ValidationError):
        MutantSpec(0, "gain_scale", "tau", 2.0)
    with pytest.raises(ValidationError):
        MutantSpec(0, "gain_scale", "k_gap", 1.0)


def test_apply_examples():
    swap = apply_mutant(MutantSpec(0, "clamp_swap", "accel_limits", 1.0))
    assert (swap.a_min, swap.a_max) == (2.5, -6.0)
    assert swap.bounds() == (-6.0, 2.5)
    assert apply_mutant(MutantSpec(0, "sensor_range_scale", "sensor_range", 0.1)).sensor_range == pytest.approx(15)
    flip = apply_mutant(MutantSpec(0, "sign_flip", "relative_speed", -1.0))
    assert flip.rel_sign == -1.0 and flip.gap_sign == 1.0
    assert apply_mutant(MutantSpec(0, "stuck_output", "a_cmd", -1.0)).stuck == -6.0
    assert apply_mutant(MutantSpec(0, "detection_offset", "sensor_range", 0.5)).detection_offset == 75.0
    assert apply_mutant(MutantSpec(0, "constant_shift", "tau", -0.5)).tau == pytest.approx(0.9)


def test_detection_offset_shrinks_range():
    s = ScenarioSetup(20.0, 20.0, True, 100.0, 20.0, duration=10.0)
    nominal = Controller.nominal()
    off = apply_mutant(MutantSpec(0, "detection_offset", "sensor_range", 0.5))
    from semiconcrete.sim.core import simulate
    assert simulate(s, nominal).detected[0] and not simulate(s, off).detected[0]


@pytest.fixture(scope="module")
def suite():
    return nominal_scenarios()


@pytest.fixture(scope="module")
def mutants():
    return generate_mutants(50, seed=1)


@pytest.fixture(scope="module")
def matrix(suite, mutants):
    return run_kill_matrix(suite, mutants)


def test_kill_matrix_score_definition(matrix, mutants):
    assert matrix.killed.shape == (50, 12)
    assert matrix.mutation_score == matrix.killed.any(axis=1).sum() / 50
    assert 0 < matrix.mutation_score < 1


def test_kill_matrix_cells_match_direct_runs(matrix, suite, mutants):
    for i in (0, 17, 49):
        ctrl = apply_mutant(mutants[i])
        ok = run_verdicts(suite, [ctrl] * len(suite)).all(axis=1)
        assert np.array_equal(matrix.killed[i], ~ok)


def test_validity_gate_excludes_failing_tests(suite, mutants):
    crash = ScenarioSetup(40.0, 40.0, True, 5.0, 0.0)
    km = run_kill_matrix(list(suite) + [crash], mutants)
    assert km.invalid_tests == [12] and km.valid_tests == list(range(12))
    assert km.killed.shape == (50, 12)
    with pytest.raises(ValidationError, match="no test"):
        run_kill_matrix([crash], mutants)


def test_equivalent_mutant_counts_in_denominator():
    s = ScenarioSetup(20.0, 20.0)  # no lead: detection faults are invisible
    m = [MutantSpec(0, "detection_offset", "sensor_range", 0.25), MutantSpec(1, "gain_scale", "k_v", 0.0)]
    km = run_kill_matrix([ScenarioSetup(20.0, 30.0), s], m)
    assert km.killed[0].sum() == 0 and km.killed[1].any()
    assert km.mutation_score == 0.5


def test_monotone_under_test_addition(matrix):
    rng = np.random.default_rng(0)
    n = matrix.killed.shape[1]
    for _ in range(200):
        b = rng.random(n) < 0.6
        a = b & (rng.random(n) < 0.5)
        score = lambda cols: matrix.killed[:, cols].any(axis=1).mean() if cols.any() else 0.0
        assert score(a) <= score(b)


def test_deterministic_and_parallel(suite, mutants, matrix):
    again = run_kill_matrix(suite, mutants, workers=4)
    assert np.array_equal(again.killed, matrix.killed)


def test_trajectory_criterion(suite, mutants, matrix):
    tr = run_kill_matrix(suite, mutants, criterion="trajectory")
    assert tr.mutation_score >= matrix.mutation_score
    with pytest.raises(ValidationError):
        run_kill_matrix(suite, mutants, criterion="vibes")


def test_empty_mutant_list(suite):
    with pytest.raises(ValidationError):
        run_kill_matrix(suite, [])


def test_files(tmp_path, matrix, mutants):
    save_mutants(tmp_path / "m.json", mutants, 1)
    assert load_mutants(tmp_path / "m.json") == mutants
    matrix.to_csv(tmp_path / "k.csv")
    rows = (tmp_path / "k.csv").read_text().splitlines()
    assert len(rows) == 52 and rows[-1].startswith("score")
