from hypothesis import given, settings, strategies as st

from conftest import canonical, random_triple, source
from tracerw.checker import canonical_slice, infer_closed
from tracerw.core import erase, Result, Row, Trace, TraceVar, UnitT, Variant
from tracerw.render import DisplayNames, parse_formal, render_formal, render_simplified
from tracerw.syntax import parse_program


def test_display_names_follow_first_appearance():
    a, b = TraceVar(7), TraceVar(3)
    m1, m2 = TraceVar(9, True), TraceVar(4, True)
    d = DisplayNames.for_env((Trace(a, frozenset({m1, m2})), Trace(b, frozenset())))
    assert d.ident(a) == "a"
    assert d.ident(b) == "b"
    assert d.member(m1) == "a0"
    assert d.member(m2) == "a1"


def test_simplified_result_of_literal():
    a = TraceVar(1)
    ten = Variant(Row.of([("10", UnitT(frozenset({a})))], "r"))
    assert render_simplified((Trace(a, frozenset()),), Result(frozenset({a}), ten)) == "▶{a} 10"


def test_combinator_renders_parameter_first():
    res = infer_closed(parse_program(source("e4")))
    text = res.rendered()
    assert text.startswith("({a}: (a0 a1 a2) → a3) ⇒ ")


def test_e1_rendering():
    res = infer_closed(parse_program(source("e1")))
    assert canonical(res.rendered()) == canonical("{d,e}: d0*1 | e0*2 → d0 | e0+e0")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000))
def test_formal_rendering_reads_back(seed):
    tri = random_triple(seed)
    text = render_formal(tri.omega, tri.phi)
    phi, omega = parse_formal(text)
    assert erase(omega) == erase(tri.omega)
    ours = sorted(repr(canonical_slice(tri.phi, t.ident, tri.omega)) for t in tri.phi)
    back = sorted(repr(canonical_slice(phi, t.ident, omega)) for t in phi)
    assert ours == back
