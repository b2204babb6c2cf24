from hypothesis import given, settings, strategies as st

from conftest import random_triple
from tracerw.core import (
    Alt, CombApp, Exec, Fail, Label, PLabel, PPair, PUnit, PVar, Pair, Rec, Row,
    Rule, Seq, Succ, TraceVar, TVar, Unit, UnitT, Var, Variant, erase, fold_rec,
    free_vars, is_comb_value, is_value, p2e, subst_term, term_from_json,
    term_to_json, types_equal, unfold_rec,
)
from tracerw.syntax import parse_program


def num(n):
    return Label(str(n), Unit())


def test_values_and_combinator_values():
    r = Rule(PVar("x"), Var("x"))
    assert is_value(r)
    assert is_comb_value(CombApp(Seq(), r))
    assert is_comb_value(CombApp(CombApp(Seq(), r), r))
    assert is_value(Succ(num(3)))
    assert is_value(Fail())
    assert not is_value(Exec(r, Succ(num(3))))
    assert not is_value(Alt(Succ(num(1)), Fail()))


def test_p2e_and_substitution():
    p = PLabel("Op", PPair(PLabel("Mul", PUnit()), PPair(PVar("m"), PVar("n"))))
    e = p2e(p)
    assert free_vars(e) == {"m", "n"}
    closed = subst_term(e, {"m": num(1), "n": num(2)})
    assert closed == Label("Op", Pair(Label("Mul", Unit()), Pair(num(1), num(2))))


def test_substitution_stops_at_rule_binders():
    r = Rule(PVar("x"), Var("x"))
    assert subst_term(r, {"x": num(5)}) == r


def test_term_json_round_trip():
    t = parse_program("let f = rule m * n -> n * m in f (1 * 2)")
    assert term_from_json(term_to_json(t)) == t


def test_recursive_types_equal_their_unfolding():
    a = TraceVar(1)
    rec = Rec("u", Row.of([("Z", UnitT()), ("S", TVar("u"))], None))
    assert types_equal(rec, unfold_rec(rec))
    assert types_equal(unfold_rec(rec), rec)
    assert fold_rec(unfold_rec(rec), rec) == rec
    traced = Variant(Row.of([("Z", UnitT(frozenset({a})))], None))
    assert not types_equal(traced, erase(traced))
    assert types_equal(traced, erase(traced), traces=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_erase_is_idempotent(seed):
    t = random_triple(seed).omega
    once = erase(t)
    assert erase(once) == once
