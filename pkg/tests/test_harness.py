import json

import pytest

from conftest import source
from tracerw import harness, traces
from tracerw.checker import infer_closed
from tracerw.core import PUnit, Rule, Unit, UnitT
from tracerw.harness import (
    THEOREMS, check_theorems, gen_rule, gen_strategy_program, run, sugared_size, write_report,
)
from tracerw.syntax import parse_program


def test_depth_zero_rule_is_unit_rewrite():
    assert gen_rule(0, 0) == Rule(PUnit(), Unit())


def test_generated_rules_are_typed_by_construction():
    for seed in range(200):
        assert infer_closed(gen_rule(seed, seed % 4)).ok


def test_generated_programs_are_small_and_well_typed():
    for seed in range(100):
        prog = gen_strategy_program(seed)
        assert sugared_size(prog) <= 25
        assert infer_closed(prog).ok


def test_generation_is_deterministic():
    assert gen_strategy_program(17) == gen_strategy_program(17)


def test_theorems_hold_on_example_2():
    rep = check_theorems(parse_program(source("e2")))
    assert rep.well_traced
    assert not rep.violated
    assert rep.verdicts["successful_rewrite"].checked >= 1
    assert rep.verdicts["seq_reduction"].checked == 0


def test_failed_rule_path_on_example_6_body():
    body = "(rule 2 * n -> n + n ; rule 2 + 3 -> 5) (2 * 2)"
    rep = check_theorems(parse_program(body))
    assert not rep.well_traced
    assert not rep.violated
    assert rep.verdicts["empty_result"].checked >= 1
    assert rep.verdicts["failed_rule"].checked >= 1


def test_small_run_is_clean_and_reports(tmp_path):
    report = run(seeds=40, workers=1)
    assert report["programs"] == 40
    assert report["violations"] == 0
    assert set(report["theorems"]) == set(THEOREMS)
    js, png = write_report(report, tmp_path / "report.json")
    assert json.loads(js.read_text())["programs"] == 40
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def _drop_unit_clause(orig):
    def mutated(alpha, members, a, b):
        if isinstance(a, UnitT) and isinstance(b, UnitT) and \
                (a.ann == {alpha} and not b.ann or b.ann == {alpha} and not a.ann):
            return {}
        return orig(alpha, members, a, b)
    return mutated


def test_mutated_unification_is_caught_and_shrunk(monkeypatch):
    monkeypatch.setattr(traces, "_unify_trace", _drop_unit_clause(traces._unify_trace))
    report = run(seeds=60, workers=1)
    assert report["violations"] > 0
    ce = report["counterexamples"][0]
    assert sugared_size(parse_program(ce["shrunk"])) <= sugared_size(parse_program(ce["program"]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_shrinker_returns_original_when_nothing_smaller_fails(seed):
    prog = gen_strategy_program(seed)
    assert harness.shrink(prog, "progress", budget=50) == prog
