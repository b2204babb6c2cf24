"""Core calculus: terms, patterns, the traced type universe and basic utilities."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Union


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"bad span {self.start}..{self.end}")


# ---------------------------------------------------------------- patterns


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PUnit:
    pass


@dataclass(frozen=True)
class PPair:
    left: "Pattern"
    right: "Pattern"


@dataclass(frozen=True)
class PLabel:
    label: str
    arg: "Pattern"


Pattern = Union[PVar, PUnit, PPair, PLabel]


def pattern_vars(p: Pattern) -> list[str]:
    """Variables of a pattern in left-to-right order, duplicates kept."""
    if isinstance(p, PVar):
        return [p.name]
    if isinstance(p, PPair):
        return pattern_vars(p.left) + pattern_vars(p.right)
    if isinstance(p, PLabel):
        return pattern_vars(p.arg)
    return []


def is_linear(p: Pattern) -> bool:
    names = pattern_vars(p)
    return len(names) == len(set(names))


# ------------------------------------------------------------------- terms
# Spans are excluded from equality and hashing so that structurally equal
# terms coming from different sources compare equal.

_span = field(default=None, compare=False, hash=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: Span | None = _span


@dataclass(frozen=True)
class Rule:
    pat: Pattern
    body: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Unit:
    span: Span | None = _span


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Label:
    label: str
    arg: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Seq:
    span: Span | None = _span


@dataclass(frozen=True)
class Choice:
    span: Span | None = _span


@dataclass(frozen=True)
class St:
    var: str
    body: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class CombApp:
    fn: "Term"
    arg: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Exec:
    strat: "Term"
    inp: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Succ:
    body: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Fail:
    span: Span | None = _span


@dataclass(frozen=True)
class Alt:
    left: "Term"
    right: "Term"
    span: Span | None = _span


@dataclass(frozen=True)
class Let:
    var: str
    bound: "Term"
    body: "Term"
    span: Span | None = _span


Term = Union[Var, Rule, Unit, Pair, Label, Seq, Choice, St, CombApp, Exec,
             Succ, Fail, Alt, Let]


def is_comb_value(e: Term) -> bool:
    while isinstance(e, CombApp):
        if not is_value(e.arg):
            return False
        e = e.fn
    return isinstance(e, (Seq, Choice))


def is_value(e: Term) -> bool:
    if isinstance(e, (Seq, Choice, St, Rule, Unit, Fail)):
        return True
    if isinstance(e, CombApp):
        return is_comb_value(e)
    if isinstance(e, Label):
        return is_value(e.arg)
    if isinstance(e, Pair):
        return is_value(e.left) and is_value(e.right)
    if isinstance(e, Succ):
        return is_value(e.body)
    return False


def is_data_value(e: Term) -> bool:
    """Values built only from unit, pairs and labels (what rules rewrite)."""
    if isinstance(e, Unit):
        return True
    if isinstance(e, Label):
        return is_data_value(e.arg)
    if isinstance(e, Pair):
        return is_data_value(e.left) and is_data_value(e.right)
    return False


def children(e: Term) -> tuple[Term, ...]:
    if isinstance(e, Rule):
        return (e.body,)
    if isinstance(e, (Pair, Alt)):
        return (e.left, e.right)
    if isinstance(e, Label):
        return (e.arg,)
    if isinstance(e, St):
        return (e.body,)
    if isinstance(e, CombApp):
        return (e.fn, e.arg)
    if isinstance(e, Exec):
        return (e.strat, e.inp)
    if isinstance(e, Succ):
        return (e.body,)
    if isinstance(e, Let):
        return (e.bound, e.body)
    return ()


def pattern_size(p: Pattern) -> int:
    if isinstance(p, PPair):
        return 1 + pattern_size(p.left) + pattern_size(p.right)
    if isinstance(p, PLabel):
        return 1 + pattern_size(p.arg)
    return 1


def term_size(e: Term) -> int:
    n = 1 + sum(term_size(c) for c in children(e))
    if isinstance(e, Rule):
        n += pattern_size(e.pat)
    return n


def subterms(e: Term) -> Iterator[Term]:
    yield e
    for c in children(e):
        yield from subterms(c)


def p2e(p: Pattern) -> Term:
    if isinstance(p, PVar):
        return Var(p.name)
    if isinstance(p, PUnit):
        return Unit()
    if isinstance(p, PPair):
        return Pair(p2e(p.left), p2e(p.right))
    return Label(p.label, p2e(p.arg))


def subst_term(e: Term, s: Mapping[str, Term]) -> Term:
    """Substitute closed terms for free variables; stops at shadowing binders."""
    if not s:
        return e
    if isinstance(e, Var):
        return s.get(e.name, e)
    if isinstance(e, Rule):
        bound = set(pattern_vars(e.pat))
        inner = {k: v for k, v in s.items() if k not in bound}
        return replace(e, body=subst_term(e.body, inner))
    if isinstance(e, St):
        inner = {k: v for k, v in s.items() if k != e.var}
        return replace(e, body=subst_term(e.body, inner))
    if isinstance(e, Let):
        inner = {k: v for k, v in s.items() if k != e.var}
        return replace(e, bound=subst_term(e.bound, s), body=subst_term(e.body, inner))
    if isinstance(e, (Pair, Alt)):
        return replace(e, left=subst_term(e.left, s), right=subst_term(e.right, s))
    if isinstance(e, Label):
        return replace(e, arg=subst_term(e.arg, s))
    if isinstance(e, CombApp):
        return replace(e, fn=subst_term(e.fn, s), arg=subst_term(e.arg, s))
    if isinstance(e, Exec):
        return replace(e, strat=subst_term(e.strat, s), inp=subst_term(e.inp, s))
    if isinstance(e, Succ):
        return replace(e, body=subst_term(e.body, s))
    return e


def free_vars(e: Term) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Rule):
        return free_vars(e.body) - set(pattern_vars(e.pat))
    if isinstance(e, St):
        return free_vars(e.body) - {e.var}
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.var})
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


# ------------------------------------------------------------------- traces


@dataclass(frozen=True, order=True)
class TraceVar:
    uid: int
    member: bool = False

    def __repr__(self) -> str:
        return f"{'m' if self.member else 'i'}{self.uid}"


Ann = frozenset  # frozenset[TraceVar]
NOANN: frozenset = frozenset()


@dataclass(frozen=True)
class Trace:
    ident: TraceVar
    members: frozenset

    def __post_init__(self) -> None:
        assert not self.ident.member
        assert all(b.member for b in self.members)


TracingEnv = tuple  # tuple[Trace, ...]


def env_ids(phi: TracingEnv) -> tuple[TraceVar, ...]:
    return tuple(t.ident for t in phi)


def env_lookup(phi: TracingEnv, alpha: TraceVar) -> Trace:
    for t in phi:
        if t.ident == alpha:
            return t
    raise KeyError(alpha)


def member_owners(phi: TracingEnv) -> dict[TraceVar, TraceVar]:
    return {b: t.ident for t in phi for b in t.members}


class Supply:
    """Session-confined source of fresh trace and type variable names."""

    def __init__(self) -> None:
        self._n = itertools.count(1)

    def ident(self) -> TraceVar:
        return TraceVar(next(self._n), False)

    def member(self) -> TraceVar:
        return TraceVar(next(self._n), True)

    def name(self, prefix: str) -> str:
        return f"{prefix}{next(self._n)}"


# -------------------------------------------------------------------- types


@dataclass(frozen=True)
class TVar:
    name: str
    ann: frozenset = NOANN


@dataclass(frozen=True)
class Row:
    """Label entries sorted by label plus an optional row-variable tail."""
    entries: tuple  # tuple[tuple[str, Traceable], ...]
    tail: str | None = None

    @staticmethod
    def of(entries: Iterable[tuple[str, "Traceable"]], tail: str | None = None) -> "Row":
        es = tuple(sorted(entries, key=lambda kv: label_key(kv[0])))
        labels = [k for k, _ in es]
        if len(labels) != len(set(labels)):
            raise ValueError(f"duplicate row label in {labels}")
        return Row(es, tail)

    def labels(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)

    def get(self, label: str) -> "Traceable | None":
        for k, v in self.entries:
            if k == label:
                return v
        return None


def label_key(label: str) -> tuple:
    return (0, int(label), "") if label.isdigit() else (1, 0, label)


@dataclass(frozen=True)
class Variant:
    row: Row
    ann: frozenset = NOANN


@dataclass(frozen=True)
class Rec:
    var: str
    row: Row
    ann: frozenset = NOANN


@dataclass(frozen=True)
class UnitT:
    ann: frozenset = NOANN


@dataclass(frozen=True)
class PairT:
    left: "Traceable"
    right: "Traceable"
    ann: frozenset = NOANN


Traceable = Union[TVar, Variant, Rec, UnitT, PairT]


@dataclass(frozen=True)
class Result:
    ids: frozenset
    ty: Traceable


@dataclass(frozen=True)
class Strat:
    ids: frozenset
    inp: Traceable
    out: Traceable


@dataclass(frozen=True)
class Comb:
    param: Strat
    body: "Traced"


Traced = Union[Result, Strat, Comb]
Type = Union[Traceable, Traced]

TRACEABLE = (TVar, Variant, Rec, UnitT, PairT)


def with_ann(t: Traceable, ann: frozenset) -> Traceable:
    return t if t.ann == ann else replace(t, ann=frozenset(ann))


def add_ann(t: Traceable, ann: Iterable[TraceVar]) -> Traceable:
    ann = frozenset(ann)
    return t if ann <= t.ann else replace(t, ann=t.ann | ann)


def map_row(row: Row, f) -> Row:
    return Row(tuple((k, f(v)) for k, v in row.entries), row.tail)


def erase(t: Type) -> Type:
    if isinstance(t, TVar):
        return t if not t.ann else TVar(t.name)
    if isinstance(t, UnitT):
        return UnitT()
    if isinstance(t, PairT):
        return PairT(erase(t.left), erase(t.right))
    if isinstance(t, Variant):
        return Variant(map_row(t.row, erase))
    if isinstance(t, Rec):
        return Rec(t.var, map_row(t.row, erase))
    if isinstance(t, Result):
        return Result(NOANN, erase(t.ty))
    if isinstance(t, Strat):
        return Strat(NOANN, erase(t.inp), erase(t.out))
    if isinstance(t, Comb):
        return Comb(erase(t.param), erase(t.body))
    raise TypeError(t)


def is_untraced(t: Type) -> bool:
    return erase(t) == t


def annotations(t: Type) -> Iterator[TraceVar]:
    """Every trace variable occurring in t, in a deterministic traversal order."""
    if isinstance(t, TRACEABLE):
        yield from sorted(t.ann)
        if isinstance(t, PairT):
            yield from annotations(t.left)
            yield from annotations(t.right)
        elif isinstance(t, (Variant, Rec)):
            for _, v in t.row.entries:
                yield from annotations(v)
    elif isinstance(t, Result):
        yield from sorted(t.ids)
        yield from annotations(t.ty)
    elif isinstance(t, Strat):
        yield from sorted(t.ids)
        yield from annotations(t.inp)
        yield from annotations(t.out)
    elif isinstance(t, Comb):
        yield from annotations(t.param)
        yield from annotations(t.body)


def rename_traces(t: Type, m: Mapping[TraceVar, TraceVar]) -> Type:
    if not m:
        return t

    def rn(s: frozenset) -> frozenset:
        return frozenset(m.get(v, v) for v in s)

    if isinstance(t, TVar):
        return with_ann(t, rn(t.ann))
    if isinstance(t, UnitT):
        return UnitT(rn(t.ann))
    if isinstance(t, PairT):
        return PairT(rename_traces(t.left, m), rename_traces(t.right, m), rn(t.ann))
    if isinstance(t, Variant):
        return Variant(map_row(t.row, lambda v: rename_traces(v, m)), rn(t.ann))
    if isinstance(t, Rec):
        return Rec(t.var, map_row(t.row, lambda v: rename_traces(v, m)), rn(t.ann))
    if isinstance(t, Result):
        return Result(rn(t.ids), rename_traces(t.ty, m))
    if isinstance(t, Strat):
        return Strat(rn(t.ids), rename_traces(t.inp, m), rename_traces(t.out, m))
    if isinstance(t, Comb):
        return Comb(rename_traces(t.param, m), rename_traces(t.body, m))
    raise TypeError(t)


def mems(members: Iterable[TraceVar], t: Type) -> set:
    """Member-traced subterms of a single-traced type."""
    members = frozenset(members)
    out: set = set()

    def go(t: Type) -> None:
        if isinstance(t, TRACEABLE):
            if t.ann & members:
                out.add(t)
                return
            if isinstance(t, PairT):
                go(t.left)
                go(t.right)
            elif isinstance(t, (Variant, Rec)):
                for _, v in t.row.entries:
                    go(v)
        elif isinstance(t, Result):
            go(t.ty)
        elif isinstance(t, Strat):
            go(t.inp)
            go(t.out)
        elif isinstance(t, Comb):
            go(t.param)
            go(t.body)

    go(t)
    return out


# -------------------------------------------------- type-variable plumbing


def free_type_vars(t: Type) -> tuple[list[str], list[str]]:
    """Free type variables and row variables, in first-occurrence order."""
    tvs: list[str] = []
    rvs: list[str] = []

    def go(t: Type, bound: frozenset) -> None:
        if isinstance(t, TVar):
            if t.name not in bound and t.name not in tvs:
                tvs.append(t.name)
        elif isinstance(t, PairT):
            go(t.left, bound)
            go(t.right, bound)
        elif isinstance(t, (Variant, Rec)):
            inner = bound | {t.var} if isinstance(t, Rec) else bound
            for _, v in t.row.entries:
                go(v, inner)
            if t.row.tail is not None and t.row.tail not in rvs:
                rvs.append(t.row.tail)
        elif isinstance(t, Result):
            go(t.ty, bound)
        elif isinstance(t, Strat):
            go(t.inp, bound)
            go(t.out, bound)
        elif isinstance(t, Comb):
            go(t.param, bound)
            go(t.body, bound)

    go(t, frozenset())
    return tvs, rvs


def subst_tyvar(t: Type, s: Mapping[str, Traceable]) -> Type:
    """Replace free type variables; annotations of the variable are kept."""
    if not s:
        return t
    if isinstance(t, TVar):
        if t.name in s:
            return add_ann(s[t.name], t.ann)
        return t
    if isinstance(t, UnitT):
        return t
    if isinstance(t, PairT):
        return PairT(subst_tyvar(t.left, s), subst_tyvar(t.right, s), t.ann)
    if isinstance(t, Variant):
        return Variant(map_row(t.row, lambda v: subst_tyvar(v, s)), t.ann)
    if isinstance(t, Rec):
        inner = {k: v for k, v in s.items() if k != t.var}
        return Rec(t.var, map_row(t.row, lambda v: subst_tyvar(v, inner)), t.ann)
    if isinstance(t, Result):
        return Result(t.ids, subst_tyvar(t.ty, s))
    if isinstance(t, Strat):
        return Strat(t.ids, subst_tyvar(t.inp, s), subst_tyvar(t.out, s))
    if isinstance(t, Comb):
        return Comb(subst_tyvar(t.param, s), subst_tyvar(t.body, s))
    raise TypeError(t)


def rename_vars(t: Type, tv: Mapping[str, str], rv: Mapping[str, str]) -> Type:
    """Rename free type variables and row variables (rec binders untouched)."""
    def row(r: Row, bound: frozenset) -> Row:
        es = tuple((k, go(v, bound)) for k, v in r.entries)
        return Row(es, rv.get(r.tail, r.tail) if r.tail else None)

    def go(t: Type, bound: frozenset) -> Type:
        if isinstance(t, TVar):
            if t.name in bound:
                return t
            return TVar(tv.get(t.name, t.name), t.ann)
        if isinstance(t, UnitT):
            return t
        if isinstance(t, PairT):
            return PairT(go(t.left, bound), go(t.right, bound), t.ann)
        if isinstance(t, Variant):
            return Variant(row(t.row, bound), t.ann)
        if isinstance(t, Rec):
            return Rec(t.var, row(t.row, bound | {t.var}), t.ann)
        if isinstance(t, Result):
            return Result(t.ids, go(t.ty, bound))
        if isinstance(t, Strat):
            return Strat(t.ids, go(t.inp, bound), go(t.out, bound))
        if isinstance(t, Comb):
            return Comb(go(t.param, bound), go(t.body, bound))
        raise TypeError(t)

    return go(t, frozenset())


def unfold_rec(t: Rec) -> Variant:
    """One unfolding step; interior traces are erased, the root keeps its own."""
    folded = erase(Rec(t.var, t.row))
    body = subst_tyvar(Variant(t.row), {t.var: folded})
    return Variant(body.row, t.ann)


def fold_rec(t: Traceable, rec: Rec) -> Traceable:
    """Fold t back into rec when t is (structurally) rec's unfolding."""
    if isinstance(t, Variant) and types_equal(erase(t), erase(unfold_rec(rec))):
        return Rec(rec.var, erase(rec).row, t.ann)
    return t


# ----------------------------------------------------------- type equality


def types_equal(a: Type, b: Type, *, alpha: bool = False, traces: bool = True) -> bool:
    """Equality up to row order and recursive-type conversion.

    With ``alpha`` set, free type/row variables may be renamed bijectively.
    With ``traces`` unset annotations are ignored.
    """
    tmap: dict[str, str] = {}
    tinv: dict[str, str] = {}
    seen: set = set()

    def var_ok(x: str | None, y: str | None) -> bool:
        if x is None or y is None:
            return x is None and y is None
        if not alpha:
            return x == y
        if x in tmap or y in tinv:
            return tmap.get(x) == y and tinv.get(y) == x
        tmap[x] = y
        tinv[y] = x
        return True

    def eq(a: Type, b: Type) -> bool:
        if isinstance(a, TRACEABLE) and isinstance(b, TRACEABLE):
            if traces and a.ann != b.ann:
                return False
            if isinstance(a, Rec) or isinstance(b, Rec):
                key = (a, b)
                if key in seen:
                    return True
                seen.add(key)
                a2 = unfold_rec(a) if isinstance(a, Rec) else a
                b2 = unfold_rec(b) if isinstance(b, Rec) else b
                return eq(a2, b2)
            if type(a) is not type(b):
                return False
            if isinstance(a, TVar):
                return var_ok(a.name, b.name)
            if isinstance(a, UnitT):
                return True
            if isinstance(a, PairT):
                return eq(a.left, b.left) and eq(a.right, b.right)
            if a.row.labels() != b.row.labels():
                return False
            if not var_ok(a.row.tail, b.row.tail):
                return False
            return all(eq(x, y) for (_, x), (_, y) in zip(a.row.entries, b.row.entries))
        if type(a) is not type(b):
            return False
        if isinstance(a, Result):
            return (not traces or a.ids == b.ids) and eq(a.ty, b.ty)
        if isinstance(a, Strat):
            return (not traces or a.ids == b.ids) and eq(a.inp, b.inp) and eq(a.out, b.out)
        if isinstance(a, Comb):
            return eq(a.param, b.param) and eq(a.body, b.body)
        return False

    return eq(a, b)


# --------------------------------------------------------------- envs/schemes


@dataclass(frozen=True)
class RowKind:
    lacks: frozenset


@dataclass(frozen=True)
class StarKind:
    """Traceable kind; ``general`` marks the kind of traced types."""
    general: bool = False


Kind = Union[RowKind, StarKind]


@dataclass(frozen=True)
class Scheme:
    phi: TracingEnv
    tyvars: tuple   # tuple[str, ...]
    rowvars: tuple  # tuple[tuple[str, frozenset], ...]  name and lacks set
    body: Traced


# ------------------------------------------------------------------- JSON


def term_to_json(e: Term | Pattern) -> dict:
    kind = type(e).__name__
    out: dict = {"kind": kind}
    for f in e.__dataclass_fields__.values():
        if f.name == "span":
            continue
        v = getattr(e, f.name)
        out[f.name] = term_to_json(v) if hasattr(v, "__dataclass_fields__") else v
    return out


_TERM_KINDS = {c.__name__: c for c in (Var, Rule, Unit, Pair, Label, Seq, Choice, St,
                                       CombApp, Exec, Succ, Fail, Alt, Let,
                                       PVar, PUnit, PPair, PLabel)}


def term_from_json(d: dict) -> Term | Pattern:
    cls = _TERM_KINDS[d["kind"]]
    kw = {}
    for k, v in d.items():
        if k == "kind":
            continue
        kw[k] = term_from_json(v) if isinstance(v, dict) else v
    return cls(**kw)


def type_to_json(t: Type, names: Mapping[TraceVar, str] | None = None) -> dict:
    """JSON form of a type; trace sets become arrays of display names."""
    if names is None:
        from .render import DisplayNames
        names = DisplayNames.for_type(t).names

    def ts(s: frozenset) -> list[str]:
        return sorted(names.get(v, repr(v)) for v in s)

    def row(r: Row) -> dict:
        return {"entries": [[k, go(v)] for k, v in r.entries], "tail": r.tail}

    def go(t: Type) -> dict:
        if isinstance(t, TVar):
            return {"kind": "var", "name": t.name, "ann": ts(t.ann)}
        if isinstance(t, UnitT):
            return {"kind": "unit", "ann": ts(t.ann)}
        if isinstance(t, PairT):
            return {"kind": "pair", "left": go(t.left), "right": go(t.right), "ann": ts(t.ann)}
        if isinstance(t, Variant):
            return {"kind": "variant", "row": row(t.row), "ann": ts(t.ann)}
        if isinstance(t, Rec):
            return {"kind": "rec", "var": t.var, "row": row(t.row), "ann": ts(t.ann)}
        if isinstance(t, Result):
            return {"kind": "result", "ids": ts(t.ids), "type": go(t.ty)}
        if isinstance(t, Strat):
            return {"kind": "strategy", "ids": ts(t.ids), "input": go(t.inp), "output": go(t.out)}
        if isinstance(t, Comb):
            return {"kind": "combinator", "param": go(t.param), "body": go(t.body)}
        raise TypeError(t)

    return go(t)
