"""Surface syntax: lexer, parser, desugaring into core terms, and printers."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import (
    Alt, Choice, CombApp, Exec, Fail, Label, Let, PLabel, PPair, PUnit, PVar,
    Pair, Pattern, Rule, Seq, Span, St, Succ, Term, Unit, Var,
)

KEYWORDS = {"let", "in", "st", "rule", "seq", "choice", "succ", "fail"}
OP_LABELS = {"*": "Mul", "+": "Add", "-": "Sub", "/": "Div"}
LABEL_OPS = {v: k for k, v in OP_LABELS.items()}


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


# ------------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str   # ident, label, num, kw, sym, eof
    text: str
    span: Span


_LEX = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|=>|\|\||<>|[();,=*+\-/])
""", re.VERBOSE)


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    pos = 0
    while pos < len(src):
        m = _LEX.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", Span(pos, pos + 1))
        span = Span(m.start(), m.end())
        if m.lastgroup == "num":
            toks.append(Token("num", m.group(), span))
        elif m.lastgroup == "word":
            w = m.group()
            if w in KEYWORDS:
                kind = "kw"
            elif w[0].isupper():
                kind = "label"
            else:
                kind = "ident"
            toks.append(Token(kind, w, span))
        elif m.lastgroup == "sym":
            toks.append(Token("sym", m.group(), span))
        pos = m.end()
    toks.append(Token("eof", "", Span(len(src), len(src))))
    return toks


# ------------------------------------------------------------- surface AST


@dataclass(frozen=True)
class SExpr:
    """Surface node. ``kind`` selects the meaning of ``value``/``kids``."""
    kind: str       # num var unit pair label binop rule chain st app let paren
    span: Span      # seq choice succ fail alt
    value: str = ""
    kids: tuple = field(default=())


class Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0

    # -- helpers

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("sym", "kw") and t.text == text

    def take(self, text: str | None = None) -> Token:
        t = self.peek()
        if text is not None and not self.at(text):
            raise ParseError(f"expected {text!r} but found {t.text or 'end of input'!r}", t.span)
        self.i += 1
        return t

    def ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected a variable name but found {t.text or 'end of input'!r}",
                             t.span)
        self.i += 1
        return t

    def starts_primary(self) -> bool:
        t = self.peek()
        if t.kind in ("ident", "label", "num"):
            return True
        return t.kind in ("sym", "kw") and t.text in ("(", "seq", "choice", "fail", "succ")

    @staticmethod
    def join(a: Span, b: Span) -> Span:
        return Span(a.start, b.end)

    # -- grammar

    def program(self) -> SExpr:
        e = self.expr()
        if self.peek().kind != "eof":
            raise ParseError(f"unexpected {self.peek().text!r}", self.peek().span)
        return e

    def expr(self) -> SExpr:
        if self.at("let"):
            start = self.take().span
            name = self.ident().text
            self.take("=")
            bound = self.expr()
            self.take("in")
            body = self.expr()
            return SExpr("let", self.join(start, body.span), name, (bound, body))
        if self.at("st"):
            start = self.take().span
            name = self.ident().text
            self.take("=>")
            body = self.expr()
            return SExpr("st", self.join(start, body.span), name, (body,))
        return self.chain()

    def chain(self) -> SExpr:
        first = self.alt()
        if not (self.at(";") or self.at("||")):
            return first
        op = self.peek().text
        items = [first]
        while self.at(";") or self.at("||"):
            tok = self.take()
            if tok.text != op:
                raise ParseError("mixing ';' and '||' requires parentheses", tok.span)
            items.append(self.chain_operand())
        return SExpr("chain", self.join(first.span, items[-1].span), op, tuple(items))

    def chain_operand(self) -> SExpr:
        if self.at("let") or self.at("st"):
            return self.expr()
        return self.alt()

    def alt(self) -> SExpr:
        left = self.arith(False)
        while self.at("<>"):
            self.take()
            right = self.arith(False)
            left = SExpr("alt", self.join(left.span, right.span), "", (left, right))
        return left

    def arith(self, data: bool) -> SExpr:
        left = self.term(data)
        while self.at("+") or self.at("-"):
            op = self.take().text
            right = self.term(data)
            left = SExpr("binop", self.join(left.span, right.span), op, (left, right))
        return left

    def term(self, data: bool) -> SExpr:
        left = self.app(data)
        while self.at("*") or self.at("/"):
            op = self.take().text
            right = self.app(data)
            left = SExpr("binop", self.join(left.span, right.span), op, (left, right))
        return left

    def app(self, data: bool) -> SExpr:
        t = self.peek()
        if self.at("rule"):
            if data:
                raise ParseError("rules cannot appear inside rule bodies", t.span)
            return self.rule()
        if self.at("succ"):
            start = self.take().span
            arg = self.primary(data)
            return SExpr("succ", self.join(start, arg.span), "", (arg,))
        if t.kind == "label" or t.kind == "num":
            self.take()
            if t.kind == "label":
                if not self.starts_primary():
                    raise ParseError(f"label {t.text} needs an argument", t.span)
                arg = self.primary(data)
                return SExpr("label", self.join(t.span, arg.span), t.text, (arg,))
            if self.starts_primary() and self.peek().kind != "ident":
                arg = self.primary(data)
                return SExpr("label", self.join(t.span, arg.span), t.text, (arg,))
            num = SExpr("num", t.span, t.text)
            return self.opvar_tail(num) if data else num
        head = self.primary(data)
        if data:
            return self.opvar_tail(head)
        while self.starts_primary():
            arg = self.primary(data)
            head = SExpr("app", self.join(head.span, arg.span), "", (head, arg))
        return head

    def opvar_tail(self, left: SExpr) -> SExpr:
        if self.peek().kind != "ident":
            return left
        op = self.ident()
        if not self.starts_primary():
            raise ParseError("operator variable needs a right operand", op.span)
        right = self.primary(True)
        if self.peek().kind == "ident":
            raise ParseError("operator-variable applications do not associate; add parentheses",
                             self.peek().span)
        return SExpr("binop", self.join(left.span, right.span), op.text,
                     (left, right, SExpr("var", op.span, op.text)))

    def primary(self, data: bool) -> SExpr:
        t = self.peek()
        if t.kind == "ident":
            self.take()
            return SExpr("var", t.span, t.text)
        if t.kind == "num":
            self.take()
            return SExpr("num", t.span, t.text)
        if t.kind == "label":
            raise ParseError(f"label {t.text} with its argument must be parenthesized here",
                             t.span)
        if self.at("seq") or self.at("choice") or self.at("fail"):
            self.take()
            return SExpr(t.text, t.span)
        if self.at("succ"):
            return self.app(data)
        if self.at("("):
            start = self.take().span
            if self.at(")"):
                end = self.take().span
                return SExpr("unit", self.join(start, end))
            inner = self.arith(True) if data else self.expr()
            if self.at(","):
                self.take()
                right = self.arith(True) if data else self.expr()
                end = self.take(")").span
                return SExpr("pair", self.join(start, end), "", (inner, right))
            end = self.take(")").span
            return SExpr("paren", self.join(start, end), "", (inner,))
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span)

    def rule(self) -> SExpr:
        start = self.take("rule").span
        pat = self.arith(True)
        self.take("->")
        body = self.arith(True)
        return SExpr("rule", self.join(start, body.span), "", (pat, body))


def parse(src: str) -> SExpr:
    return Parser(src).program()


# ---------------------------------------------------------------- desugar


def _data_kind(n: SExpr) -> bool:
    return n.kind in ("num", "unit", "pair", "label", "binop") or (
        n.kind == "paren" and _data_kind(n.kids[0]))


def _kind(n: SExpr, scope: dict) -> str:
    if _data_kind(n):
        return "data"
    if n.kind in ("succ", "fail", "alt"):
        return "result"
    if n.kind == "paren":
        return _kind(n.kids[0], scope)
    if n.kind == "app":
        return "result" if _kind(n.kids[1], scope) in ("data", "result") else "strategy"
    if n.kind == "var":
        return scope.get(n.value, "strategy")
    if n.kind == "let":
        inner = dict(scope)
        inner[n.value] = _kind(n.kids[0], scope)
        return _kind(n.kids[1], inner)
    return "strategy"


def desugar(n: SExpr, scope: dict | None = None) -> Term:
    return _desugar(n, scope or {})


def _desugar(n: SExpr, scope: dict) -> Term:
    k, sp = n.kind, n.span
    if k == "num":
        return Label(n.value, Unit(span=sp), span=sp)
    if k == "var":
        return Var(n.value, span=sp)
    if k == "unit":
        return Unit(span=sp)
    if k == "pair":
        return Pair(_desugar(n.kids[0], scope), _desugar(n.kids[1], scope), span=sp)
    if k == "label":
        return Label(n.value, _desugar(n.kids[0], scope), span=sp)
    if k == "binop":
        left, right = _desugar(n.kids[0], scope), _desugar(n.kids[1], scope)
        if n.value in OP_LABELS:
            op: Term = Label(OP_LABELS[n.value], Unit(span=sp), span=sp)
        else:
            op = Var(n.value, span=n.kids[2].span)
        return Label("Op", Pair(op, Pair(left, right, span=sp), span=sp), span=sp)
    if k == "paren":
        inner = _desugar(n.kids[0], scope)
        return _respan(inner, sp)
    if k == "rule":
        return Rule(to_pattern(n.kids[0]), _desugar(n.kids[1], scope), span=sp)
    if k == "seq":
        return Seq(span=sp)
    if k == "choice":
        return Choice(span=sp)
    if k == "fail":
        return Fail(span=sp)
    if k == "succ":
        return Succ(_desugar(n.kids[0], scope), span=sp)
    if k == "alt":
        return Alt(_desugar(n.kids[0], scope), _desugar(n.kids[1], scope), span=sp)
    if k == "chain":
        comb: Term = Seq(span=sp) if n.value == ";" else Choice(span=sp)
        acc = _desugar(n.kids[0], scope)
        for i, item in enumerate(n.kids[1:], start=1):
            item_sp = Span(n.kids[0].span.start, item.span.end)
            acc = CombApp(CombApp(comb, acc, span=item_sp), _desugar(item, scope), span=item_sp)
        return acc
    if k == "st":
        inner = dict(scope)
        inner[n.value] = "strategy"
        return St(n.value, _desugar(n.kids[0], inner), span=sp)
    if k == "let":
        bound = _desugar(n.kids[0], scope)
        inner = dict(scope)
        inner[n.value] = _kind(n.kids[0], scope)
        return Let(n.value, bound, _desugar(n.kids[1], inner), span=sp)
    if k == "app":
        fn, arg = n.kids
        kind = _kind(arg, scope)
        f = _desugar(fn, scope)
        a = _desugar(arg, scope)
        if kind == "data":
            return Exec(f, Succ(a, span=arg.span), span=sp)
        if kind == "result":
            return Exec(f, a, span=sp)
        return CombApp(f, a, span=sp)
    raise AssertionError(f"unknown surface node {k}")


def _respan(t: Term, sp: Span) -> Term:
    from dataclasses import replace
    return replace(t, span=sp)


def to_pattern(n: SExpr) -> Pattern:
    k = n.kind
    if k == "var":
        return PVar(n.value)
    if k == "unit":
        return PUnit()
    if k == "num":
        return PLabel(n.value, PUnit())
    if k == "pair":
        return PPair(to_pattern(n.kids[0]), to_pattern(n.kids[1]))
    if k == "label":
        return PLabel(n.value, to_pattern(n.kids[0]))
    if k == "paren":
        return to_pattern(n.kids[0])
    if k == "binop":
        op = PLabel(OP_LABELS[n.value], PUnit()) if n.value in OP_LABELS else PVar(n.value)
        return PLabel("Op", PPair(op, PPair(to_pattern(n.kids[0]), to_pattern(n.kids[1]))))
    raise ParseError("not a valid pattern", n.span)


def parse_program(src: str) -> Term:
    return desugar(parse(src))


# ---------------------------------------------------------------- printing
# Precedence levels: 0 let/st/rule, 1 chain, 2 alt, 3 additive,
# 4 multiplicative, 5 application, 6 atom.


def _binop_parts(e) -> tuple | None:
    """(left, op, right) when e is sugared binary-operator data."""
    if isinstance(e, (Label, PLabel)) and e.label == "Op":
        p = e.arg
        if isinstance(p, (Pair, PPair)) and isinstance(p.right, (Pair, PPair)):
            op = p.left
            if isinstance(op, (Label, PLabel)) and op.label in LABEL_OPS \
                    and isinstance(op.arg, (Unit, PUnit)):
                return p.right.left, LABEL_OPS[op.label], p.right.right
            if isinstance(op, (Var, PVar)):
                return p.right.left, op.name, p.right.right
    return None


def _data(e, prec: int) -> str:
    """Print a data term or pattern."""
    parts = _binop_parts(e)
    if parts is not None:
        left, op, right = parts
        if op in OP_LABELS:
            mine = 3 if op in "+-" else 4
            s = f"{_data(left, mine)} {op} {_data(right, mine + 1)}"
        else:
            mine = 5
            s = f"{_data(left, 6)} {op} {_data(right, 6)}"
        return f"({s})" if prec > mine else s
    if isinstance(e, (Var, PVar)):
        return e.name
    if isinstance(e, (Unit, PUnit)):
        return "()"
    if isinstance(e, (Pair, PPair)):
        return f"({_data(e.left, 0)}, {_data(e.right, 0)})"
    if isinstance(e, (Label, PLabel)):
        if e.label[0].isdigit() and isinstance(e.arg, (Unit, PUnit)):
            return e.label
        s = f"{e.label} {_data(e.arg, 6)}"
        return f"({s})" if prec > 5 else s
    return _pp(e, prec)


def _is_data(e: Term) -> bool:
    if isinstance(e, (Unit, Label)):
        return True
    if isinstance(e, Pair):
        return True
    return False


def _pp(e: Term, prec: int) -> str:
    def wrap(s: str, mine: int) -> str:
        return f"({s})" if prec > mine else s

    if _is_data(e):
        return _data(e, prec)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Seq):
        return "seq"
    if isinstance(e, Choice):
        return "choice"
    if isinstance(e, Fail):
        return "fail"
    if isinstance(e, Rule):
        return wrap(f"rule {_data(e.pat, 3)} -> {_data(e.body, 3)}", 0)
    if isinstance(e, St):
        return wrap(f"st {e.var} => {_pp(e.body, 0)}", 0)
    if isinstance(e, Let):
        return wrap(f"let {e.var} = {_pp(e.bound, 0)} in {_pp(e.body, 0)}", 0)
    if isinstance(e, Succ):
        return wrap(f"succ {_pp(e.body, 6)}", 5)
    if isinstance(e, Alt):
        return wrap(f"{_pp(e.left, 2)} <> {_pp(e.right, 3)}", 2)
    if isinstance(e, CombApp):
        if isinstance(e.fn, CombApp) and isinstance(e.fn.fn, (Seq, Choice)):
            op = ";" if isinstance(e.fn.fn, Seq) else "||"
            left = e.fn.arg
            same = isinstance(left, CombApp) and isinstance(left.fn, CombApp) \
                and type(left.fn.fn) is type(e.fn.fn)
            ls = _pp(left, 1) if same else _pp(left, 2)
            return wrap(f"{ls} {op} {_pp(e.arg, 2)}", 1)
        return wrap(f"{_pp(e.fn, 5)} {_pp(e.arg, 6)}", 5)
    if isinstance(e, Exec):
        if isinstance(e.inp, Succ) and _is_data(e.inp.body):
            return wrap(f"{_pp(e.strat, 5)} ({_data(e.inp.body, 0)})", 5)
        return wrap(f"{_pp(e.strat, 5)} {_pp(e.inp, 6)}", 5)
    raise TypeError(e)


def print_surface(e: Term) -> str:
    """Surface text that parses and desugars back to e."""
    return _pp(e, 0)


def show_value(e: Term) -> str:
    """Compact display of evaluation outcomes, e.g. ``succ (1*(4+3))``."""
    if isinstance(e, Succ):
        inner = show_value(e.body)
        atomic = re.fullmatch(r"[\w']+|\(.*\)", inner) is not None and (
            not inner.startswith("(") or _balanced_outer(inner))
        return f"succ {inner}" if atomic else f"succ ({inner})"
    parts = _binop_parts(e)
    if parts is not None and parts[1] in OP_LABELS:
        left, op, right = parts

        def operand(x):
            s = show_value(x)
            return f"({s})" if _binop_parts(x) is not None or " " in s else s

        return f"{operand(left)}{op}{operand(right)}"
    if isinstance(e, Label) and not (e.label[0].isdigit() and isinstance(e.arg, Unit)):
        s = show_value(e.arg)
        return f"{e.label} {s if ' ' not in s else '(' + s + ')'}"
    if isinstance(e, Pair):
        return f"({show_value(e.left)}, {show_value(e.right)})"
    if _is_data(e):
        return _data(e, 0)
    return print_surface(e)


def _balanced_outer(s: str) -> bool:
    depth = 0
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and i < len(s) - 1:
            return False
    return True


def show_core(e: Term) -> str:
    """Core-calculus display using the combinator arrows."""
    if _binop_parts(e) is not None or isinstance(e, (Unit, Pair, Label, Var)):
        return _data(e, 6) if not isinstance(e, Var) else e.name
    if isinstance(e, Seq):
        return "seq"
    if isinstance(e, Choice):
        return "choice"
    if isinstance(e, Fail):
        return "fail"
    if isinstance(e, Rule):
        return f"(rule {_data(e.pat, 3)} -> {_data(e.body, 3)})"
    if isinstance(e, St):
        return f"(st {e.var} => {show_core(e.body)})"
    if isinstance(e, Let):
        return f"(let {e.var} = {show_core(e.bound)} in {show_core(e.body)})"
    if isinstance(e, Succ):
        return f"succ {show_core(e.body)}"
    if isinstance(e, Alt):
        return f"({show_core(e.left)} ⋄ {show_core(e.right)})"
    if isinstance(e, CombApp):
        return f"({show_core(e.fn)} ⇐ {show_core(e.arg)})"
    if isinstance(e, Exec):
        return f"({show_core(e.strat)} ← {show_core(e.inp)})"
    raise TypeError(e)
