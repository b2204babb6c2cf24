import pytest

from tracerw.core import (
    PairT, Rec, Result, Row, RowKind, StarKind, Supply, Trace, TraceVar, TVar,
    UnitT, Variant, erase,
)
from tracerw.structural import IllTraced, KindError, StructuralError, Unifier, kind_of, trace_check

A = TraceVar(1)
B0 = TraceVar(2, True)
C = TraceVar(3)


def var(**entries):
    return Variant(Row.of(list(entries.items()), None))


def test_kinds_of_rows_track_lacks():
    delta = {"r": RowKind(frozenset({"A", "B"}))}
    t = Variant(Row.of([("A", UnitT())], "r"))
    assert kind_of(delta, None, t) == StarKind(False)
    with pytest.raises(KindError):
        kind_of({"r": RowKind(frozenset())}, None, t)
    with pytest.raises(KindError):
        kind_of({}, None, TVar("t"))


def test_trace_check_identifiers_and_members():
    phi = (Trace(A, frozenset({B0})),)
    assert trace_check(phi, UnitT(frozenset({A}))) == {A}
    assert trace_check(phi, TVar("t", frozenset({B0}))) == {A}
    # identifiers only annotate unit
    with pytest.raises(IllTraced):
        trace_check(phi, TVar("t", frozenset({A})))
    # pair sides must agree
    with pytest.raises(IllTraced):
        trace_check(phi, PairT(UnitT(frozenset({A})), UnitT()))
    # row entries carry disjoint traces
    phi2 = phi + (Trace(C, frozenset()),)
    ok = var(X=UnitT(frozenset({A})), Y=UnitT(frozenset({C})))
    assert trace_check(phi2, ok) == {A, C}
    with pytest.raises(IllTraced):
        trace_check(phi2, var(X=UnitT(frozenset({A})), Y=UnitT(frozenset({A}))))
    with pytest.raises(KindError):
        kind_of({}, phi, Result(frozenset({C}), UnitT(frozenset({A}))))


def test_row_unification_extends_both_sides():
    u = Unifier(Supply())
    r1, r2 = u.fresh_row({"A"}), u.fresh_row({"B"})
    a = Variant(Row.of([("A", UnitT())], r1))
    b = Variant(Row.of([("B", UnitT())], r2))
    u.unify(a, b)
    za, zb = u.zonk(a), u.zonk(b)
    assert za == zb
    assert za.row.labels() == ("A", "B")


def test_closed_rows_reject_missing_labels():
    u = Unifier(Supply())
    with pytest.raises(StructuralError):
        u.unify(var(A=UnitT()), var(B=UnitT()))


def test_lacks_constraint_blocks_label():
    u = Unifier(Supply())
    r = u.fresh_row({"A", "B"})
    with pytest.raises(StructuralError):
        u.unify(Variant(Row.of([("A", UnitT())], r)), var(A=UnitT(), B=UnitT()))


def test_occurs_under_variant_builds_recursive_type():
    u = Unifier(Supply())
    t = u.fresh_tvar()
    r = u.fresh_row({"S", "Z"})
    u.unify(t, Variant(Row.of([("S", t), ("Z", UnitT())], r)))
    z = u.zonk(t)
    assert isinstance(z, Rec)


def test_occurs_outside_variant_is_an_error():
    u = Unifier(Supply())
    t = u.fresh_tvar()
    with pytest.raises(StructuralError):
        u.unify(t, PairT(t, UnitT()))


def test_rigid_variables_are_not_bound():
    u = Unifier(Supply())
    u.rigid = {"t'"}
    with pytest.raises(StructuralError):
        u.unify(TVar("t'"), UnitT())
    # a flexible row may still grow to meet a rigid one
    r = u.fresh_row({"A"})
    u.rigid.add("r'")
    u.lacks["r'"] = frozenset({"A", "B"})
    u.unify(Variant(Row.of([("A", UnitT())], r)),
            Variant(Row.of([("A", UnitT()), ("B", UnitT())], "r'")))


def test_unification_ignores_traces():
    u = Unifier(Supply())
    u.unify(UnitT(frozenset({A})), UnitT())
    assert erase(u.zonk(UnitT(frozenset({A})))) == UnitT()
