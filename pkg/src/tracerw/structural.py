"""Kinding, the tracing judgement and structural (trace-erased) unification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    NOANN, TRACEABLE, Comb, Kind, PairT, Rec, Result, Row, RowKind, StarKind,
    Strat, Supply, TracingEnv, TraceVar, Traceable, TVar, Type, UnitT, Variant,
    add_ann, env_ids, with_ann, erase, free_type_vars, member_owners, subst_tyvar,
    unfold_rec,
)


class KindError(Exception):
    pass


class IllTraced(Exception):
    pass


class StructuralError(Exception):
    """User-facing structural type error."""


# ------------------------------------------------------------------ kinding


def kind_of(delta: Mapping[str, Kind], phi: TracingEnv | None, t: Type) -> Kind:
    """Kind of t. Rows get their residual lacks set; traced types are checked
    against the tracing judgement when a tracing env is supplied."""

    def row_kind(r: Row, bound: frozenset) -> RowKind:
        labels = [k for k, _ in r.entries]
        if len(labels) != len(set(labels)):
            raise KindError(f"duplicate row label in {labels}")
        for _, v in r.entries:
            star(v, bound)
        if r.tail is None:
            return RowKind(NOANN)
        k = delta.get(r.tail)
        if not isinstance(k, RowKind):
            raise KindError(f"unbound row variable {r.tail}")
        missing = set(labels) - k.lacks
        if missing:
            raise KindError(f"row variable {r.tail} does not lack {sorted(missing)}")
        return RowKind(k.lacks - set(labels))

    def star(t: Traceable, bound: frozenset) -> StarKind:
        if isinstance(t, TVar):
            if t.name not in bound and not isinstance(delta.get(t.name), StarKind):
                raise KindError(f"unbound type variable {t.name}")
        elif isinstance(t, PairT):
            star(t.left, bound)
            star(t.right, bound)
        elif isinstance(t, Variant):
            row_kind(t.row, bound)
        elif isinstance(t, Rec):
            row_kind(t.row, bound | {t.var})
        elif not isinstance(t, UnitT):
            raise KindError(f"not a traceable type: {t!r}")
        return StarKind(False)

    def traced(t: Type) -> StarKind:
        if isinstance(t, Result):
            star(t.ty, frozenset())
            if phi is not None and trace_check(phi, t.ty) != t.ids:
                raise KindError("result identifier set disagrees with tracing")
        elif isinstance(t, Strat):
            star(t.inp, frozenset())
            star(t.out, frozenset())
            if phi is not None:
                if trace_check(phi, t.inp) != t.ids or trace_check(phi, t.out) != t.ids:
                    raise KindError("strategy identifier set disagrees with tracing")
        elif isinstance(t, Comb):
            traced(t.param)
            traced(t.body)
        else:
            raise KindError(f"not a traced type: {t!r}")
        return StarKind(True)

    if isinstance(t, TRACEABLE):
        return star(t, frozenset())
    return traced(t)


# ------------------------------------------------------------------ tracing


def trace_check(phi: TracingEnv, t: Traceable) -> frozenset:
    """Identifier set φ with Φ ⊢ t ⊣ φ; raises IllTraced otherwise."""
    ids = frozenset(env_ids(phi))
    owners = member_owners(phi)

    def single(t: Traceable, g: TraceVar) -> frozenset:
        if not g.member:
            if not isinstance(t, UnitT):
                raise IllTraced(f"identifier {g!r} annotates a non-unit type")
            if g not in ids:
                raise IllTraced(f"identifier {g!r} not in tracing env")
            return frozenset({g})
        if g not in owners:
            raise IllTraced(f"member {g!r} not in tracing env")
        alpha = owners[g]
        inner = go(t)
        if alpha in inner:
            raise IllTraced(f"member {g!r} nested inside its own trace")
        return inner | {alpha}

    def go(t: Traceable) -> frozenset:
        if t.ann:
            first, *rest = sorted(t.ann)
            head = single(with_ann(t, NOANN), first)
            tail = go(UnitT(frozenset(rest))) if rest else NOANN
            if head & tail:
                raise IllTraced("overlapping traces in one annotation set")
            return head | tail
        if isinstance(t, (TVar, UnitT)):
            return NOANN
        if isinstance(t, PairT):
            left, right = go(t.left), go(t.right)
            if left != right:
                raise IllTraced("pair components carry different traces")
            return left
        acc: frozenset = NOANN
        for _, v in t.row.entries:
            s = go(v)
            if s & acc:
                raise IllTraced("row entries share a trace")
            acc |= s
        return acc

    return go(t)


def trace_ids_of(phi: TracingEnv, t: Type) -> frozenset:
    """Identifier set of a result or strategy type, recomputed by tracing."""
    if isinstance(t, Result):
        return trace_check(phi, t.ty)
    if isinstance(t, Strat):
        a, b = trace_check(phi, t.inp), trace_check(phi, t.out)
        if a != b:
            raise IllTraced("strategy sides carry different traces")
        return a
    raise TypeError("trace ids are only defined on result and strategy types")


# -------------------------------------------------------- structural unify


@dataclass
class Unifier:
    """Session substitution over type and row variables (trace-free range)."""
    supply: Supply
    tys: dict = field(default_factory=dict)
    rows: dict = field(default_factory=dict)
    lacks: dict = field(default_factory=dict)
    rigid: set = field(default_factory=set)

    def fresh_tvar(self, ann: frozenset = NOANN) -> TVar:
        return TVar(self.supply.name("t"), ann)

    def fresh_row(self, lacks=()) -> str:
        r = self.supply.name("r")
        self.lacks[r] = frozenset(lacks)
        return r

    def lacks_of(self, r: str) -> frozenset:
        return self.lacks.get(r, NOANN)

    # -- resolution

    def resolve(self, t: Traceable) -> Traceable:
        while isinstance(t, TVar) and t.name in self.tys:
            t = add_ann(self.tys[t.name], t.ann)
        return t

    def resolve_row(self, r: Row) -> Row:
        entries = list(r.entries)
        tail = r.tail
        while tail is not None and tail in self.rows:
            ext = self.rows[tail]
            entries.extend(ext.entries)
            tail = ext.tail
        return Row.of(entries, tail)

    def zonk(self, t: Type) -> Type:
        if isinstance(t, TVar):
            if t.name in self.tys:
                return add_ann(self.zonk(self.tys[t.name]), t.ann)
            return t
        if isinstance(t, UnitT):
            return t
        if isinstance(t, PairT):
            return PairT(self.zonk(t.left), self.zonk(t.right), t.ann)
        if isinstance(t, Variant):
            return Variant(self.zonk_row(t.row), t.ann)
        if isinstance(t, Rec):
            return Rec(t.var, self.zonk_row(t.row), t.ann)
        if isinstance(t, Result):
            return Result(t.ids, self.zonk(t.ty))
        if isinstance(t, Strat):
            return Strat(t.ids, self.zonk(t.inp), self.zonk(t.out))
        if isinstance(t, Comb):
            return Comb(self.zonk(t.param), self.zonk(t.body))
        raise TypeError(t)

    def zonk_row(self, r: Row) -> Row:
        r = self.resolve_row(r)
        return Row(tuple((k, self.zonk(v)) for k, v in r.entries), r.tail)

    # -- unification

    def unify(self, a: Type, b: Type) -> None:
        self._unify(a, b, set())

    def _unify(self, a: Type, b: Type, seen: set) -> None:
        if isinstance(a, Result) and isinstance(b, Result):
            return self._unify(a.ty, b.ty, seen)
        if isinstance(a, Strat) and isinstance(b, Strat):
            self._unify(a.inp, b.inp, seen)
            return self._unify(a.out, b.out, seen)
        if isinstance(a, Comb) and isinstance(b, Comb):
            self._unify(a.param, b.param, seen)
            return self._unify(a.body, b.body, seen)
        if not (isinstance(a, TRACEABLE) and isinstance(b, TRACEABLE)):
            raise StructuralError(f"cannot unify {kind_name(a)} with {kind_name(b)}")
        a, b = self.resolve(a), self.resolve(b)
        if isinstance(a, TVar) and isinstance(b, TVar) and a.name == b.name:
            return
        if isinstance(a, TVar) and a.name not in self.rigid:
            return self._bind(a.name, b)
        if isinstance(b, TVar) and b.name not in self.rigid:
            return self._bind(b.name, a)
        if isinstance(a, TVar) or isinstance(b, TVar):
            raise StructuralError("type is less general than expected")
        if isinstance(a, Rec) or isinstance(b, Rec):
            key = (erase(self.zonk(a)), erase(self.zonk(b)))
            if key in seen:
                return
            seen.add(key)
            a2 = unfold_rec(a) if isinstance(a, Rec) else a
            b2 = unfold_rec(b) if isinstance(b, Rec) else b
            return self._unify(a2, b2, seen)
        if isinstance(a, UnitT) and isinstance(b, UnitT):
            return
        if isinstance(a, PairT) and isinstance(b, PairT):
            self._unify(a.left, b.left, seen)
            return self._unify(a.right, b.right, seen)
        if isinstance(a, Variant) and isinstance(b, Variant):
            return self._unify_rows(a.row, b.row, seen)
        raise StructuralError(f"cannot unify {kind_name(a)} with {kind_name(b)}")

    def _bind(self, name: str, t: Traceable) -> None:
        tz = erase(self.zonk(t))
        if isinstance(tz, TVar) and tz.name == name:
            return
        if name in free_type_vars(tz)[0]:
            if not isinstance(tz, Variant):
                raise StructuralError(f"infinite type: {name} occurs in its own definition")
            mu = self.supply.name("u")
            tz = Rec(mu, subst_tyvar(tz, {name: TVar(mu)}).row)
        self.tys[name] = tz

    def _unify_rows(self, r1: Row, r2: Row, seen: set) -> None:
        r1, r2 = self.resolve_row(r1), self.resolve_row(r2)
        l1, l2 = set(r1.labels()), set(r2.labels())
        for k in sorted(l1 & l2):
            self._unify(r1.get(k), r2.get(k), seen)
            r1, r2 = self.resolve_row(r1), self.resolve_row(r2)
        if set(r1.labels()) != l1 or set(r2.labels()) != l2:
            # a tail was bound while unifying a shared label (recursive types)
            return self._unify_rows(r1, r2, seen)
        only1 = [(k, v) for k, v in r1.entries if k not in l2]
        only2 = [(k, v) for k, v in r2.entries if k not in l1]
        t1, t2 = r1.tail, r2.tail
        if not only1 and not only2:
            if t1 == t2:
                return
            if t1 is None or t2 is None:
                var = t1 if t2 is None else t2
                self._bind_row(var, Row((), None))
                return
            if t1 in self.rigid and t2 in self.rigid:
                raise StructuralError("row variables differ")
            if t1 in self.rigid:
                t1, t2 = t2, t1
            self.lacks[t2] = self.lacks_of(t2) | self.lacks_of(t1)
            self._bind_row(t1, Row((), t2))
            return
        if only1 and t2 is None or only2 and t1 is None:
            labels = [k for k, _ in (only1 if t2 is None else only2)]
            raise StructuralError(f"variant has no case for label(s) {', '.join(labels)}")
        if t1 is not None and t1 == t2:
            raise StructuralError("incompatible rows sharing a tail")
        if t1 is None:
            self._bind_row(t2, Row.of(only1, None))
        elif t2 is None:
            self._bind_row(t1, Row.of(only2, None))
        elif not only1 and t1 not in self.rigid:
            self._bind_row(t1, Row.of(only2, t2))
        elif not only2 and t2 not in self.rigid:
            self._bind_row(t2, Row.of(only1, t1))
        else:
            all_labels = l1 | l2
            r3 = self.fresh_row(self.lacks_of(t1) | self.lacks_of(t2) | all_labels)
            self._bind_row(t1, Row.of(only2, r3))
            self._bind_row(t2, Row.of(only1, r3))

    def _bind_row(self, var: str, ext: Row) -> None:
        if var in self.rigid:
            raise StructuralError("row is less general than expected")
        clash = self.lacks_of(var) & set(ext.labels())
        if clash:
            raise StructuralError(f"label {sorted(clash)[0]} is excluded from this row")
        ext = Row(tuple((k, erase(self.zonk(v))) for k, v in ext.entries), ext.tail)
        for _, v in ext.entries:
            if var in free_type_vars(v)[1]:
                raise StructuralError("infinite row")
        if ext.tail == var:
            raise StructuralError("infinite row")
        if ext.tail is not None:
            self.lacks[ext.tail] = self.lacks_of(ext.tail) | self.lacks_of(var) | set(ext.labels())
        self.rows[var] = ext


def kind_name(t: Type) -> str:
    return {
        TVar: "a type variable", UnitT: "unit", PairT: "a pair", Variant: "a variant",
        Rec: "a recursive variant", Result: "a result type", Strat: "a strategy type",
        Comb: "a combinator type",
    }.get(type(t), type(t).__name__)
