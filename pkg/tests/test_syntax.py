import random

import pytest
from hypothesis import given, settings, strategies as st

from tracerw.core import (
    Alt, Choice, CombApp, Exec, Label, Let, PVar, Pair, Rule, Seq, St, Succ, Unit, Var,
)
from tracerw.harness import gen_candidate
from tracerw.syntax import ParseError, parse_program, print_surface, show_value


def num(n):
    return Label(str(n), Unit())


def op(name, a, b):
    return Label("Op", Pair(Label(name, Unit()), Pair(a, b)))


def test_arithmetic_precedence():
    e = parse_program("succ (1 + 2 * 3)")
    assert e == Succ(op("Add", num(1), op("Mul", num(2), num(3))))


def test_rule_with_operator_variable():
    r = parse_program("rule m op n -> n op m")
    assert isinstance(r, Rule)
    assert r.pat.arg.left == PVar("op")


def test_seq_and_choice_desugar_to_combinator_applications():
    r = "rule x -> x"
    e = parse_program(f"{r} ; {r}")
    assert isinstance(e, CombApp) and e.fn.fn == Seq()
    e = parse_program(f"{r} || {r}")
    assert e.fn.fn == Choice()


def test_mixing_seq_and_choice_needs_parentheses():
    with pytest.raises(ParseError):
        parse_program("rule x -> x ; rule y -> y || rule z -> z")
    parse_program("(rule x -> x ; rule y -> y) || rule z -> z")


def test_application_to_data_becomes_execution():
    e = parse_program("(rule x -> x) (1 * 2)")
    assert e == Exec(Rule(PVar("x"), Var("x")), Succ(op("Mul", num(1), num(2))))


def test_application_to_strategy_becomes_combinator_application():
    e = parse_program("let c = st s => s in c (rule x -> x)")
    assert isinstance(e, Let) and isinstance(e.bound, St)
    assert isinstance(e.body, CombApp)


def test_let_bound_result_applied_is_execution():
    e = parse_program("(rule x -> x) (fail <> succ 1)")
    assert isinstance(e, Exec) and isinstance(e.inp, Alt)


def test_parse_errors_carry_spans():
    with pytest.raises(ParseError) as info:
        parse_program("rule 1 -> ")
    assert info.value.span.start >= 9


def test_show_value_resugars():
    assert show_value(Succ(op("Add", num(4), num(3)))) == "succ (4+3)"
    assert show_value(Succ(num(10))) == "succ 10"


def test_500_generated_programs_round_trip():
    for seed in range(500):
        prog = gen_candidate(random.Random(seed), 25)
        assert parse_program(print_surface(prog)) == prog, print_surface(prog)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_property(seed):
    prog = gen_candidate(random.Random(seed), 40)
    assert parse_program(print_surface(prog)) == prog
