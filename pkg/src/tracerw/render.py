"""Simplified (per-trace sliced) and formal renderings of traced types."""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

from .core import (
    TRACEABLE, Comb, PairT, Rec, Result, Row, Strat, Supply, Trace, TracingEnv,
    TraceVar, Traceable, TVar, Type, UnitT, Variant, annotations, env_ids,
)

OP_SYMBOLS = {"Mul": "*", "Add": "+", "Sub": "-", "Div": "/"}


def _letters(i: int) -> str:
    s = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        s = string.ascii_lowercase[r] + s
    return s


@dataclass
class DisplayNames:
    """Display names: identifiers a, b, ...; member k of identifier x is xk."""
    names: dict = field(default_factory=dict)
    owners: dict = field(default_factory=dict)
    _next_ident: int = 0
    _next_member: dict = field(default_factory=dict)

    @classmethod
    def for_env(cls, phi: TracingEnv) -> "DisplayNames":
        d = cls()
        for t in phi:
            for b in t.members:
                d.owners[b] = t.ident
        return d

    @classmethod
    def for_type(cls, t: Type, phi: TracingEnv = ()) -> "DisplayNames":
        d = cls.for_env(phi)
        for v in annotations(t):
            d.name(v)
        return d

    def ident(self, a: TraceVar) -> str:
        if a not in self.names:
            self.names[a] = _letters(self._next_ident)
            self._next_ident += 1
        return self.names[a]

    def member(self, b: TraceVar, owner: TraceVar | None = None) -> str:
        if b not in self.names:
            owner = owner or self.owners.get(b)
            prefix = self.ident(owner) if owner is not None else "?"
            k = self._next_member.get(prefix, 0)
            self._next_member[prefix] = k + 1
            self.names[b] = f"{prefix}{k}"
        return self.names[b]

    def name(self, v: TraceVar) -> str:
        return self.member(v) if v.member else self.ident(v)


# ------------------------------------------------------------ simplified


def render_simplified(phi: TracingEnv, omega: Type, names: DisplayNames | None = None) -> str:
    names = names or DisplayNames.for_env(phi)
    order = env_ids(phi)
    traces = {t.ident: t for t in phi}

    def ids_of(s: frozenset) -> list:
        return [a for a in order if a in s] + sorted(a for a in s if a not in order)

    def head(ids: list) -> str:
        return "{" + ",".join(names.ident(a) for a in ids) + "}"

    def side(ids: list, t: Traceable) -> str:
        parts = [show_slice(t, traces.get(a) or Trace(a, frozenset()), names) for a in ids]
        return " | ".join(parts) if parts else "_"

    def go(t: Type) -> str:
        if isinstance(t, Result):
            ids = ids_of(t.ids)
            return f"▶{head(ids)} {side(ids, t.ty)}"
        if isinstance(t, Strat):
            ids = ids_of(t.ids)
            h = head(ids)
            return f"{h}: {side(ids, t.inp)} → {side(ids, t.out)}"
        if isinstance(t, Comb):
            param = go(t.param)
            body = go(t.body) if isinstance(t.body, Comb) else f"({go(t.body)})"
            return f"({param}) ⇒ {body}"
        raise TypeError(f"cannot render {type(t).__name__} as a traced type")

    return go(omega)


def render_side(phi: TracingEnv, ids, t: Traceable, names: DisplayNames) -> str:
    traces = {tr.ident: tr for tr in phi}
    order = [a for a in env_ids(phi) if a in set(ids)]
    parts = [show_slice(t, traces[a], names) for a in order]
    return " | ".join(parts) if parts else "_"


def _relevant(t: Traceable, keep: frozenset) -> bool:
    if t.ann & keep:
        return True
    if isinstance(t, PairT):
        return _relevant(t.left, keep) or _relevant(t.right, keep)
    if isinstance(t, (Variant, Rec)):
        return any(_relevant(v, keep) for _, v in t.row.entries)
    return False


def show_slice(t: Traceable, trace: Trace, names: DisplayNames) -> str:
    keep = trace.members | {trace.ident}

    def binop(x: Traceable, op: str, y: Traceable) -> str:
        return f"{operand(x)}{op}{operand(y)}"

    def operand(x: Traceable) -> str:
        s = go(x)
        return f"({s})" if _sugared_binop(x) else s

    def _sugared_binop(x: Traceable) -> bool:
        if x.ann & trace.members or not isinstance(x, Variant):
            return False
        kept = [(k, v) for k, v in x.row.entries if _relevant(v, keep)]
        return len(kept) == 1 and kept[0][0] == "Op" and _op_symbol(kept[0][1]) is not None

    def _op_symbol(payload: Traceable) -> str | None:
        if not (isinstance(payload, PairT) and isinstance(payload.right, PairT)):
            return None
        op = payload.left
        if op.ann & trace.members or not isinstance(op, Variant):
            return None
        kept = [(k, v) for k, v in op.row.entries if _relevant(v, keep)]
        if len(kept) == 1 and kept[0][0] in OP_SYMBOLS and isinstance(kept[0][1], UnitT):
            return OP_SYMBOLS[kept[0][0]]
        return None

    def atom(s: str) -> str:
        if " " in s and not (s.startswith("(") and s.endswith(")")):
            return f"({s})"
        return s

    def go(t: Traceable) -> str:
        hit = t.ann & trace.members
        if hit:
            return names.member(min(hit), trace.ident)
        if not _relevant(t, keep):
            return "_"
        if isinstance(t, UnitT):
            return "()"
        if isinstance(t, PairT):
            return f"({go(t.left)}, {go(t.right)})"
        if isinstance(t, (Variant, Rec)):
            kept = [(k, v) for k, v in t.row.entries if _relevant(v, keep)]
            shown = [entry(k, v) for k, v in kept]
            return shown[0] if len(shown) == 1 else "⟨" + " | ".join(shown) + "⟩"
        return "_"

    def entry(label: str, payload: Traceable) -> str:
        if isinstance(payload, UnitT) and not payload.ann & trace.members and label[0].isdigit():
            return label
        if label == "Op":
            sym = _op_symbol(payload)
            if sym is not None:
                x, y = payload.right.left, payload.right.right
                return binop(x, sym, y)
            if isinstance(payload, PairT) and isinstance(payload.right, PairT) \
                    and not payload.ann & trace.members and not payload.right.ann & trace.members:
                return f"({go(payload.right.left)} {go(payload.left)} {go(payload.right.right)})"
        return f"{label} {atom(go(payload))}"

    return go(t)


# ---------------------------------------------------------------- formal


def render_formal(omega: Type, phi: TracingEnv = (), names: DisplayNames | None = None) -> str:
    names = names or DisplayNames.for_type(omega, phi)

    def ann(s: frozenset) -> str:
        if not s:
            return ""
        return "_{" + ",".join(sorted(names.name(v) for v in s)) + "}"

    def row(r: Row) -> str:
        parts = [f"{k}: {go(v)}" for k, v in r.entries]
        if r.tail is not None:
            parts.append(r.tail)
        return "⟨" + " | ".join(parts) + "⟩"

    def go(t: Type) -> str:
        if isinstance(t, TVar):
            return t.name + ann(t.ann)
        if isinstance(t, UnitT):
            return "()" + ann(t.ann)
        if isinstance(t, PairT):
            return f"({go(t.left)}, {go(t.right)})" + ann(t.ann)
        if isinstance(t, Variant):
            return row(t.row) + ann(t.ann)
        if isinstance(t, Rec):
            return f"({t.var} as {row(t.row)})" + ann(t.ann)
        if isinstance(t, Result):
            return f"▶{ids(t.ids)} {go(t.ty)}"
        if isinstance(t, Strat):
            return f"{go(t.inp)} →{ids(t.ids)} {go(t.out)}"
        if isinstance(t, Comb):
            return f"({go(t.param)}) ⇒ {go(t.body)}"
        raise TypeError(t)

    def ids(s: frozenset) -> str:
        return "{" + ",".join(sorted(names.ident(a) for a in s)) + "}"

    return go(omega)


_TOKEN = re.compile(r"\s*(▶|→|⇒|⟨|⟩|_\{|\{|\}|\(|\)|,|:|\||[A-Za-z0-9']+)")


class FormalParseError(ValueError):
    pass


def parse_formal(text: str) -> tuple[TracingEnv, Type]:
    """Debug reader for render_formal output; returns a fresh tracing env."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormalParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        toks.append(m.group(1))
        pos = m.end()
    toks.append("<eof>")
    supply = Supply()
    vars_: dict[str, TraceVar] = {}
    i = 0

    def peek(k: int = 0) -> str:
        return toks[i + k]

    def take(expect: str | None = None) -> str:
        nonlocal i
        tok = toks[i]
        if expect is not None and tok != expect:
            raise FormalParseError(f"expected {expect!r}, got {tok!r}")
        i += 1
        return tok

    def tv(name: str) -> TraceVar:
        if name not in vars_:
            member = name[-1].isdigit()
            vars_[name] = supply.member() if member else supply.ident()
        return vars_[name]

    def tvset(close: str = "}") -> frozenset:
        out = []
        while peek() != close:
            out.append(tv(take()))
            if peek() == ",":
                take(",")
        take(close)
        return frozenset(out)

    def ann_suffix(t: Traceable) -> Traceable:
        if peek() == "_{":
            take()
            return t.__class__(**{**t.__dict__, "ann": tvset()})
        return t

    def row() -> Row:
        take("⟨")
        entries = []
        tail = None
        while peek() != "⟩":
            name = take()
            if peek() == ":":
                take(":")
                entries.append((name, traceable()))
            else:
                tail = name
            if peek() == "|":
                take("|")
        take("⟩")
        return Row.of(entries, tail)

    def traceable() -> Traceable:
        tok = peek()
        if tok == "(":
            take()
            if peek() == ")":
                take()
                return ann_suffix(UnitT())
            if peek(1) == "as":
                var = take()
                take("as")
                r = row()
                take(")")
                return ann_suffix(Rec(var, r))
            left = traceable()
            take(",")
            right = traceable()
            take(")")
            return ann_suffix(PairT(left, right))
        if tok == "⟨":
            return ann_suffix(Variant(row()))
        return ann_suffix(TVar(take()))

    def traced() -> Type:
        if peek() == "▶":
            take()
            take("{")
            ids = tvset()
            return Result(ids, traceable())
        if peek() == "(" and _is_comb():
            take("(")
            param = traced()
            take(")")
            take("⇒")
            return Comb(param, traced())
        inp = traceable()
        take("→")
        take("{")
        ids = tvset()
        return Strat(ids, inp, traceable())

    def _is_comb() -> bool:
        depth = 0
        for j in range(i, len(toks)):
            if toks[j] == "(":
                depth += 1
            elif toks[j] == ")":
                depth -= 1
                if depth == 0:
                    return toks[j + 1] == "⇒"
        return False

    omega = traced()
    if peek() != "<eof>":
        raise FormalParseError(f"trailing input at {peek()!r}")
    idents = {n: v for n, v in vars_.items() if not v.member}
    members: dict[str, set] = {n: set() for n in idents}
    for n, v in vars_.items():
        if v.member:
            owner = n.rstrip("0123456789")
            if owner not in idents:
                idents[owner] = tv(owner)
                members[owner] = set()
            members[owner].add(v)
    phi = tuple(Trace(idents[n], frozenset(members[n]))
                for n in sorted(idents, key=lambda n: (len(n), n)))
    return phi, omega
