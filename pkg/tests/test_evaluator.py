import pytest

from conftest import source
from tracerw.core import Alt, Exec, Fail, Label, PVar, Rule, Succ, Unit, Var
from tracerw.evaluator import (
    FuelExhausted, evaluate_all, evaluate_sample, explore, match_pattern, step_all,
)
from tracerw.syntax import parse_program, show_value


def outcomes(text, **kw):
    return sorted(show_value(v) for v in evaluate_all(parse_program(text), **kw))


def num(n):
    return Label(str(n), Unit())


def test_alternatives_enumerate_both_successes():
    assert step_all(Alt(Succ(num(1)), Succ(num(2)))) == [Succ(num(1)), Succ(num(2))]
    assert step_all(Alt(Fail(), Succ(num(2)))) == [Succ(num(2))]
    assert step_all(Alt(Fail(), Fail())) == [Fail()]


def test_rule_application():
    ident = Rule(PVar("x"), Var("x"))
    assert step_all(Exec(ident, Succ(num(4)))) == [Succ(num(4))]
    assert step_all(Exec(ident, Fail())) == [Fail()]


def test_pattern_matching():
    p = parse_program("rule m * n -> n").pat
    v = parse_program("succ (1 * 2)").body
    assert match_pattern(p, v) == {"m": num(1), "n": num(2)}
    assert match_pattern(p, parse_program("succ (1 + 2)").body) is None


def test_example_2_evaluates_to_ten():
    assert outcomes(source("e2")) == ["succ 10"]


def test_example_5_on_one_times_seven():
    # the left branch fails; fail <> succ v only reduces to succ v
    assert outcomes(source("e5_eval")) == ["succ 7"]


def test_example_8_outcomes():
    assert outcomes(source("e8_eval")) == ["fail", "succ (4+3)"]


def test_fail_evaluates_to_fail():
    assert outcomes("fail") == ["fail"]


def test_sample_is_a_member_of_the_outcome_set():
    term = parse_program(source("e8_eval"))
    everything = evaluate_all(term)
    for seed in range(20):
        assert evaluate_sample(term, seed) in everything


def test_fuel_limit():
    with pytest.raises(FuelExhausted):
        explore(parse_program(source("e8_eval")), fuel=2)


def test_reduction_graph_records_every_edge():
    ex = explore(parse_program(source("e2")))
    assert ex.outcomes == {Succ(num(10))}
    assert all(ex.edges[t] or t in ex.outcomes for t in ex.edges)
