"""Trace computations: selection, renaming, merging, trace unification and compTrace."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from . import probes
from .core import (
    NOANN, TRACEABLE, Comb, PairT, Rec, Result, Row, Strat, Supply, Trace,
    TracingEnv, TraceVar, Traceable, TVar, Type, UnitT, Variant, add_ann,
    env_ids, erase, is_untraced, rename_traces, types_equal, unfold_rec,
    with_ann,
)
from .structural import trace_ids_of

# A trace substitution is a dict from member variables to traceable types;
# None stands for failTrace.
TraceSubst = "dict[TraceVar, Traceable] | None"
FAIL_TRACE = None


@dataclass(frozen=True)
class Triple:
    phi: TracingEnv
    sigma: tuple  # tuple[tuple[str, Strat], ...]
    omega: Type

    def erased(self) -> "Triple":
        return Triple((), tuple((x, erase(t)) for x, t in self.sigma), erase(self.omega))


def trace_ids(phi: TracingEnv, omega: Type) -> tuple[TraceVar, ...]:
    """Identifiers tracing a result or strategy type, in tracing-env order."""
    ids = trace_ids_of(phi, omega)
    return tuple(a for a in env_ids(phi) if a in ids)


# ---------------------------------------------------------------- selection


def keep_traces(t: Type, keep: frozenset) -> Type:
    """Drop every annotation not in ``keep``."""
    if isinstance(t, TRACEABLE):
        ann = t.ann & keep
        if isinstance(t, PairT):
            return PairT(keep_traces(t.left, keep), keep_traces(t.right, keep), ann)
        if isinstance(t, Variant):
            return Variant(_keep_row(t.row, keep), ann)
        if isinstance(t, Rec):
            return Rec(t.var, _keep_row(t.row, keep), ann)
        return with_ann(t, ann)
    if isinstance(t, Result):
        return Result(t.ids & keep, keep_traces(t.ty, keep))
    if isinstance(t, Strat):
        return Strat(t.ids & keep, keep_traces(t.inp, keep), keep_traces(t.out, keep))
    if isinstance(t, Comb):
        return Comb(keep_traces(t.param, keep), keep_traces(t.body, keep))
    raise TypeError(t)


def _keep_row(r: Row, keep: frozenset) -> Row:
    return Row(tuple((k, keep_traces(v, keep)) for k, v in r.entries), r.tail)


def select_in_type(trace: Trace, t: Type) -> Type:
    """Slice of t along one trace: only that trace's annotations survive."""
    keep = trace.members | {trace.ident}

    def go(t: Type) -> Type:
        if isinstance(t, TRACEABLE):
            if trace.ident in t.ann:
                return UnitT(frozenset({trace.ident}))
            hit = t.ann & trace.members
            if hit:
                return with_ann(erase(t), hit)
            if isinstance(t, PairT):
                return PairT(go(t.left), go(t.right))
            if isinstance(t, Variant):
                return Variant(Row(tuple((k, go(v)) for k, v in t.row.entries), t.row.tail))
            if isinstance(t, Rec):
                return Rec(t.var, erase(t).row)
            return with_ann(t, NOANN)
        if isinstance(t, Result):
            return Result(t.ids & keep, go(t.ty))
        if isinstance(t, Strat):
            return Strat(t.ids & keep, go(t.inp), go(t.out))
        if isinstance(t, Comb):
            return Comb(go(t.param), go(t.body))
        raise TypeError(t)

    return go(t)


def select(ids: Iterable[TraceVar], triple: Triple) -> Triple:
    """Keep only the traces named in ``ids``.

    Equivalent to adding up the single-trace slices of every selected trace
    onto the erased triple, computed in one pass.
    """
    ids = frozenset(ids)
    phi = tuple(t for t in triple.phi if t.ident in ids)
    keep = frozenset(ids).union(*(t.members for t in phi)) if phi else frozenset()
    sigma = tuple((x, keep_traces(t, keep)) for x, t in triple.sigma)
    return Triple(phi, sigma, keep_traces(triple.omega, keep))


def delete(ids: Iterable[TraceVar], triple: Triple) -> Triple:
    ids = frozenset(ids)
    return select([a for a in env_ids(triple.phi) if a not in ids], triple)


# ---------------------------------------------------------------- merging


class AddError(AssertionError):
    """Internal invariant violation: operands of add disagree after erasure."""


def add_type(a: Type, b: Type) -> Type:
    if isinstance(a, TRACEABLE) and isinstance(b, TRACEABLE):
        ann = a.ann | b.ann
        if isinstance(a, Rec) and isinstance(b, Rec) and is_untraced(Variant(a.row)) \
                and is_untraced(Variant(b.row)):
            if not types_equal(a, b, traces=False):
                raise AddError("recursive types differ")
            return Rec(a.var, a.row, ann)
        if isinstance(a, Rec):
            return add_type(unfold_rec(a), b)
        if isinstance(b, Rec):
            return add_type(a, unfold_rec(b))
        if type(a) is not type(b):
            raise AddError(f"cannot add {type(a).__name__} to {type(b).__name__}")
        if isinstance(a, TVar):
            if a.name != b.name:
                raise AddError(f"type variables {a.name} and {b.name} differ")
            return TVar(a.name, ann)
        if isinstance(a, UnitT):
            return UnitT(ann)
        if isinstance(a, PairT):
            return PairT(add_type(a.left, b.left), add_type(a.right, b.right), ann)
        if a.row.labels() != b.row.labels() or a.row.tail != b.row.tail:
            raise AddError("rows differ")
        es = tuple((k, add_type(x, y)) for (k, x), (_, y) in zip(a.row.entries, b.row.entries))
        return Variant(Row(es, a.row.tail), ann)
    if isinstance(a, Result) and isinstance(b, Result):
        return Result(a.ids | b.ids, add_type(a.ty, b.ty))
    if isinstance(a, Strat) and isinstance(b, Strat):
        return Strat(a.ids | b.ids, add_type(a.inp, b.inp), add_type(a.out, b.out))
    if isinstance(a, Comb) and isinstance(b, Comb):
        return Comb(add_type(a.param, b.param), add_type(a.body, b.body))
    raise AddError(f"cannot add {type(a).__name__} to {type(b).__name__}")


def add(m: Triple, n: Triple) -> Triple:
    """Add m to n. The result lists n's traces first, then m's."""
    if set(env_ids(m.phi)) & set(env_ids(n.phi)):
        raise AddError("tracing environments are not disjoint")
    sn = dict(n.sigma)
    sm = dict(m.sigma)
    if set(sn) != set(sm):
        raise AddError("strategy environments bind different names")
    sigma = tuple((x, add_type(sm[x], t)) for x, t in n.sigma)
    return Triple(n.phi + m.phi, sigma, add_type(m.omega, n.omega))


# ---------------------------------------------------------------- renaming


def rm_mems(trace: Trace, t: Type, acc: list) -> list:
    """Members of ``trace`` used in t, appended to acc in first-use order."""
    def go(t: Type) -> None:
        if isinstance(t, TRACEABLE):
            for b in sorted(t.ann & trace.members):
                if b not in acc:
                    acc.append(b)
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
    return acc


def fresh(triple: Triple, supply: Supply) -> Triple:
    """Rename every trace variable apart and drop unused members."""
    acc = triple.erased()
    for trace in triple.phi:
        sl = select({trace.ident}, triple)
        used: list = []
        rm_mems(trace, sl.omega, used)
        for _, t in sl.sigma:
            rm_mems(trace, t, used)
        m = {trace.ident: supply.ident()}
        m.update((b, supply.member()) for b in used)
        renamed = Triple(
            (Trace(m[trace.ident], frozenset(m[b] for b in used)),),
            tuple((x, rename_traces(t, m)) for x, t in sl.sigma),
            rename_traces(sl.omega, m),
        )
        acc = add(renamed, acc)
    return acc


# ------------------------------------------------------- trace unification


def apply_subst(t: Type, s: Mapping[TraceVar, Traceable]) -> Type:
    if not s:
        return t
    if isinstance(t, TRACEABLE):
        hit = t.ann & s.keys()
        if hit:
            b = min(hit)
            return add_ann(s[b], t.ann - {b})
        if isinstance(t, PairT):
            return PairT(apply_subst(t.left, s), apply_subst(t.right, s), t.ann)
        if isinstance(t, Variant):
            return Variant(Row(tuple((k, apply_subst(v, s)) for k, v in t.row.entries),
                               t.row.tail), t.ann)
        return t
    if isinstance(t, Result):
        return Result(t.ids, apply_subst(t.ty, s))
    if isinstance(t, Strat):
        return Strat(t.ids, apply_subst(t.inp, s), apply_subst(t.out, s))
    if isinstance(t, Comb):
        return Comb(apply_subst(t.param, s), apply_subst(t.body, s))
    raise TypeError(t)


def compose(s2, s1):
    """s2 after s1: apply s1 first, then s2."""
    if s1 is None or s2 is None:
        return None
    out = {b: apply_subst(t, s2) for b, t in s1.items()}
    for b, t in s2.items():
        out.setdefault(b, t)
    return out


def unify_trace(alpha: TraceVar, members: frozenset, a: Type, b: Type):
    """Trace unification of two single-traced slices sharing identifier alpha."""
    s = _unify_trace(alpha, frozenset(members), a, b)
    log = probes.current()
    if log is not None:
        if s is None:
            log.unify_fail += 1
        else:
            log.unify_ok += 1
            if not types_equal(apply_subst(a, s), apply_subst(b, s)):
                log.unify_violations.append((a, b, s))
    return s


def _unify_trace(alpha, members, a, b):
    if isinstance(a, TRACEABLE) and isinstance(b, TRACEABLE):
        only = frozenset({alpha})
        if isinstance(a, UnitT) and isinstance(b, UnitT):
            if a.ann == only and not b.ann or b.ann == only and not a.ann:
                return FAIL_TRACE
        hit = a.ann & members
        if hit:
            return FAIL_TRACE if is_untraced(b) else {min(hit): b}
        hit = b.ann & members
        if hit:
            return FAIL_TRACE if is_untraced(a) else {min(hit): a}
        if is_untraced(a) and is_untraced(b):
            return {}
        if a == b:
            return {}
        if isinstance(a, Rec) or isinstance(b, Rec):
            a2 = unfold_rec(a) if isinstance(a, Rec) else a
            b2 = unfold_rec(b) if isinstance(b, Rec) else b
            return _unify_trace(alpha, members, a2, b2)
        if isinstance(a, PairT) and isinstance(b, PairT):
            return _unify_seq(alpha, members, [(a.left, b.left), (a.right, b.right)])
        if isinstance(a, Variant) and isinstance(b, Variant):
            if a.row.labels() != b.row.labels():
                raise AssertionError("trace unification on structurally different rows")
            return _unify_seq(alpha, members,
                              [(x, y) for (_, x), (_, y) in zip(a.row.entries, b.row.entries)])
        if isinstance(a, UnitT) and isinstance(b, UnitT):
            return {} if a.ann == b.ann else FAIL_TRACE
        if isinstance(a, TVar) and isinstance(b, TVar) and a.name == b.name:
            return {}
        raise AssertionError(f"trace unification on {type(a).__name__} vs {type(b).__name__}")
    if isinstance(a, Result) and isinstance(b, Result):
        return _unify_trace(alpha, members, a.ty, b.ty)
    if isinstance(a, Strat) and isinstance(b, Strat):
        return _unify_seq(alpha, members, [(a.inp, b.inp), (a.out, b.out)])
    raise AssertionError("trace unification is undefined on combinator types")


def _unify_seq(alpha, members, pairs):
    s: dict = {}
    for x, y in pairs:
        s2 = _unify_trace(alpha, members, apply_subst(x, s), apply_subst(y, s))
        if s2 is None:
            return FAIL_TRACE
        s = compose(s2, s)
    return s


def check_unique_members(members: frozenset, t: Type) -> None:
    """Each member annotates at most one distinct type within a slice."""
    seen: dict = {}
    for sub in _traceables(t):
        for b in sub.ann & members:
            core = with_ann(sub, sub.ann - {b})
            prev = seen.setdefault(b, core)
            if prev != core and not types_equal(prev, core):
                raise AssertionError(f"member {b!r} keys two different types")


def _traceables(t: Type):
    if isinstance(t, TRACEABLE):
        yield t
        if isinstance(t, PairT):
            yield from _traceables(t.left)
            yield from _traceables(t.right)
        elif isinstance(t, (Variant, Rec)):
            for _, v in t.row.entries:
                yield from _traceables(v)
    elif isinstance(t, Result):
        yield from _traceables(t.ty)
    elif isinstance(t, Strat):
        yield from _traceables(t.inp)
        yield from _traceables(t.out)
    elif isinstance(t, Comb):
        yield from _traceables(t.param)
        yield from _traceables(t.body)


# ---------------------------------------------------------------- compTrace


@dataclass
class CompStats:
    iterations: int = 0
    successes: int = 0


def comp_trace(phi_m: TracingEnv, sigma_m: tuple, omega_m: Type, omega_c: Type,
               phi_n: TracingEnv, sigma_n: tuple, omega_n: Type,
               supply: Supply, stats: CompStats | None = None) -> Triple:
    stats = stats if stats is not None else CompStats()
    ids_m = trace_ids(phi_m, omega_m)
    ids_n = trace_ids(phi_n, omega_n)
    rest_m = delete(ids_m, Triple(phi_m, sigma_m, omega_c))
    rest_n = delete(ids_n, Triple(phi_n, sigma_n, omega_n))
    acc = Triple(rest_m.phi + rest_n.phi, rest_m.sigma + rest_n.sigma, rest_m.omega)
    for am in ids_m:
        sm = select({am}, Triple(phi_m, sigma_m, omega_m))
        sc = select({am}, Triple(phi_m, (), omega_c))
        for an in ids_n:
            stats.iterations += 1
            sn = select({an}, Triple(phi_n, sigma_n, omega_n))
            ren = {an: am}
            omega_n1 = rename_traces(sn.omega, ren)
            sigma_n1 = tuple((x, rename_traces(t, ren)) for x, t in sn.sigma)
            members = sm.phi[0].members | sn.phi[0].members
            check_unique_members(members, sm.omega)
            check_unique_members(members, omega_n1)
            s = unify_trace(am, members, sm.omega, omega_n1)
            if s is None:
                continue
            stats.successes += 1
            merged = Triple(
                (Trace(am, members),),
                tuple((x, apply_subst(t, s)) for x, t in sm.sigma + sigma_n1),
                apply_subst(sc.omega, s),
            )
            acc = add(fresh(merged, supply), acc)
    log = probes.current()
    if log is not None:
        log.comptrace.append((stats.iterations, stats.successes))
    return acc
