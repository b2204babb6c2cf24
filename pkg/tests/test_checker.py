import pytest

from conftest import canonical, source
from tracerw.checker import E001, E002, E003, E004, E005, W001, check_against, infer_closed
from tracerw.core import Fail, Result, Succ, Label, Unit
from tracerw.syntax import parse_program

GOLDEN = {
    "e1": "{d,e}: d0*1 | e0*2 → d0 | e0+e0",
    "e2": "▶{c} 10",
    "e3": "{e,f}: e0*1 | f0+0 → e0 | f0",
    "e4": "({a}: (a0 a2 a1) → a3) ⇒ ({a}: (a1 a2 a0) → a3)",
    "e5": "{a}: 1*a0 → a0",
}


def check(text):
    return infer_closed(parse_program(text), text)


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_types(name):
    res = check(source(name))
    assert res.ok
    assert canonical(res.rendered()) == canonical(GOLDEN[name])


def test_swap_ops_applied_to_a_rule():
    res = check(source("e4_applied"))
    assert res.ok
    assert canonical(res.rendered()) == canonical("{a}: a0*1 → a0")


def test_example_5_warns_once_on_left_composition():
    src = source("e5")
    res = check(src)
    warns = [d for d in res.diagnostics if d.code == W001]
    assert len(warns) == 1
    w = warns[0]
    assert src[w.span.start:w.span.end] == "(rule m + n -> n + m ; rule m * n -> n * m)"
    assert "guaranteed to fail at runtime" in w.message


@pytest.mark.parametrize("name,detail", [
    ("e6", "after unification of a0+a0 and 2+3"),
    ("e7", "after unification of a1*a0 | b1+b0 and c0-0 | d0/1"),
])
def test_empty_composition_bound_by_let_is_an_error(name, detail):
    src = source(name)
    res = check(src)
    assert not res.ok
    (err,) = [d for d in res.diagnostics if d.severity == "error"]
    assert err.code == E001
    assert "sequential composition is guaranteed to fail" in err.message
    assert err.message.endswith(detail)
    # the span covers the bound composition, not the let body
    assert src[err.span.start:].startswith("rule") or src[err.span.start:].startswith("(")


@pytest.mark.parametrize("text,code", [
    ("let c = st s => s ; s in c (rule x -> x)", E003),
    ("let c = st s => rule x -> x in c (rule y -> y)", E003),
    ("rule m * m -> m", E004),
    ("rule x -> y", E005),
    ("f", E005),
    ("seq (1)", E002),
    ("(rule x -> x) <> fail", E002),
])
def test_error_codes(text, code):
    res = check(text)
    assert not res.ok
    assert [d.code for d in res.diagnostics if d.severity == "error"] == [code]


def test_top_level_empty_execution_warns():
    res = check("(rule 1 -> 2) (3)")
    assert res.ok
    assert isinstance(res.type, Result) and not res.type.ids
    assert [d.code for d in res.diagnostics] == [W001]


def test_let_polymorphism():
    res = check("let f = rule x -> x in (f ; f) (1)")
    assert res.ok
    assert res.rendered() == "▶{a} 1"


def test_checking_against_inferred_and_padded_types():
    prog = parse_program(source("e2"))
    res = infer_closed(prog)
    assert check_against(prog, res.phi, res.type)
    assert check_against(Succ(Label("10", Unit())), res.phi, res.type)
    assert check_against(Fail(), res.phi, res.type)
    # wrong underlying type
    assert not check_against(Succ(Label("Z", Label("Z", Unit()))), res.phi, res.type)


def test_check_against_rejects_narrower_strategy():
    e1 = infer_closed(parse_program(source("e1")))
    single = parse_program("rule 1 * v -> v")
    assert not check_against(single, e1.phi, e1.type)
