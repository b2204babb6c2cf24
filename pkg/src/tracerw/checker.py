"""Type inference over the core calculus, with diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    NOANN, Alt, Choice, Comb, CombApp, Exec, Fail, Label, Let, PLabel, PPair,
    PUnit, PVar, Pair, Pattern, Rec, Result, Row, Rule, Scheme, Seq, Span, St,
    Strat, Succ, Supply, Term, Trace, TraceVar, Traceable, TVar, Type, Unit,
    UnitT, PairT, Var, Variant, erase, free_type_vars, rename_vars,
    types_equal,
)
from .render import DisplayNames, render_side, render_simplified
from .structural import StructuralError, Unifier, kind_name
from .syntax import show_core
from .traces import CompStats, Triple, comp_trace, fresh, add, select

W001 = "W001"
E001 = "E001"
E002 = "E002"
E003 = "E003"
E004 = "E004"
E005 = "E005"

MSG_W001 = ("this strategy is guaranteed to fail at runtime,\n"
            "but the overall strategy can still succeed")
MSG_E001 = ("this {what} is guaranteed to fail at runtime\n"
            "resulting in a guaranteed failure of the overall strategy")


@dataclass
class Diagnostic:
    severity: str  # "warning" | "error"
    code: str
    message: str
    span: Span | None
    subterm: str = ""
    surface: str = ""
    traces: str = ""

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "span": None if self.span is None else [self.span.start, self.span.end],
            "subterm": self.subterm,
            "surface": self.surface,
            "traces": self.traces,
        }


class CheckError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


@dataclass
class TypingResult:
    type: Type | None
    phi: tuple
    sigma: tuple
    diagnostics: list
    stats: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.type is not None and not any(d.severity == "error" for d in self.diagnostics)

    def rendered(self) -> str:
        return render_simplified(self.phi, self.type)


def is_empty(t: Type) -> bool:
    while isinstance(t, Comb):
        t = t.body
    return not t.ids


class Checker:
    """One inference session: owns the fresh-name supply and the unifier."""

    def __init__(self, source: str | None = None):
        self.source = source
        self.supply = Supply()
        self.uni = Unifier(self.supply)
        self.diags: list[Diagnostic] = []
        self.stats: list[tuple[Term, CompStats]] = []
        # empty-traced applications seen so far, keyed by term identity
        self._empty: dict[int, tuple[Term, str]] = {}

    # -- entry points

    def check_program(self, term: Term) -> TypingResult:
        try:
            tri = self.infer(term, {}, {})
        except CheckError as err:
            self._flush_warnings()
            self.diags.append(err.diag)
            return TypingResult(None, (), (), self.diags, self.stats)
        if tri.sigma:
            name = tri.sigma[0][0]
            self.diags.append(self._diag("error", E005, f"unbound variable {name}", term))
            return TypingResult(None, (), (), self.diags, self.stats)
        omega = self.uni.zonk(tri.omega)
        self._flush_warnings()
        return TypingResult(omega, tri.phi, (), self.diags, self.stats)

    def _flush_warnings(self) -> None:
        for term, detail in self._empty.values():
            msg = MSG_W001 + ("\n\n" + detail if detail else "")
            self.diags.append(self._diag("warning", W001, msg, term))
        self._empty.clear()
        self.diags.sort(key=lambda d: (d.span.start if d.span else -1))

    def _diag(self, severity: str, code: str, message: str, term: Term | None,
              traces: str = "") -> Diagnostic:
        span = getattr(term, "span", None) if term is not None else None
        surface = ""
        if span is not None and self.source is not None:
            surface = self.source[span.start:span.end]
        return Diagnostic(severity, code, message, span,
                          show_core(term) if term is not None else "", surface, traces)

    def error(self, code: str, message: str, term: Term | None) -> CheckError:
        return CheckError(self._diag("error", code, message, term))

    # -- patterns and rule bodies

    def type_pattern(self, alpha: TraceVar, p: Pattern, members: list, theta: dict,
                     term: Term) -> Traceable:
        if isinstance(p, PVar):
            if p.name in theta:
                raise self.error(E004, f"pattern variable {p.name} is bound more than once",
                                 term)
            b = self.supply.member()
            members.append(b)
            t = self.uni.fresh_tvar(frozenset({b}))
            theta[p.name] = t
            return t
        if isinstance(p, PUnit):
            return UnitT(frozenset({alpha}))
        if isinstance(p, PPair):
            left = self.type_pattern(alpha, p.left, members, theta, term)
            right = self.type_pattern(alpha, p.right, members, theta, term)
            return PairT(left, right)
        if isinstance(p, PLabel):
            inner = self.type_pattern(alpha, p.arg, members, theta, term)
            return Variant(Row(((p.label, inner),), self.uni.fresh_row({p.label})))
        raise TypeError(p)

    def type_rule_body(self, alpha: TraceVar, theta: dict, e: Term) -> Traceable:
        if isinstance(e, Var):
            if e.name not in theta:
                raise self.error(E005, f"variable {e.name} is not bound by the rule's pattern", e)
            return theta[e.name]
        if isinstance(e, Unit):
            return UnitT(frozenset({alpha}))
        if isinstance(e, Pair):
            return PairT(self.type_rule_body(alpha, theta, e.left),
                         self.type_rule_body(alpha, theta, e.right))
        if isinstance(e, Label):
            inner = self.type_rule_body(alpha, theta, e.arg)
            return Variant(Row(((e.label, inner),), self.uni.fresh_row({e.label})))
        raise self.error(E002, "only variables, unit, pairs and labels may appear in a "
                               "rewritten expression", e)

    # -- main judgement

    def infer(self, e: Term, gamma: dict, sigma: dict) -> Triple:
        """Infer (Φ↑; Σ↑; ω). ``sigma`` maps strategy variables to (ω, trace)."""
        u = self.uni
        s = self.supply
        if isinstance(e, Rule):
            alpha = s.ident()
            members: list = []
            theta: dict = {}
            tp = self.type_pattern(alpha, e.pat, members, theta, e)
            te = self.type_rule_body(alpha, theta, e.body)
            return Triple((Trace(alpha, frozenset(members)),), (), Strat(frozenset({alpha}), tp, te))
        if isinstance(e, Seq):
            alpha = s.ident()
            bi, bj, bk = s.member(), s.member(), s.member()
            ti, tj, tk = u.fresh_tvar(), u.fresh_tvar(), u.fresh_tvar()
            a = frozenset({alpha})
            vi, vj, vk = (TVar(ti.name, frozenset({bi})), TVar(tj.name, frozenset({bj})),
                          TVar(tk.name, frozenset({bk})))
            omega = Comb(Strat(a, vi, vj), Comb(Strat(a, vj, vk), Strat(a, vi, vk)))
            return Triple((Trace(alpha, frozenset({bi, bj, bk})),), (), omega)
        if isinstance(e, Choice):
            am, aj = s.ident(), s.ident()
            bm, bn, bj, bk = s.member(), s.member(), s.member(), s.member()
            tp, te = u.fresh_tvar().name, u.fresh_tvar().name

            def v(name, *bs):
                return TVar(name, frozenset(bs))

            omega = Comb(Strat(frozenset({am}), v(tp, bm), v(te, bn)),
                         Comb(Strat(frozenset({aj}), v(tp, bj), v(te, bk)),
                              Strat(frozenset({am, aj}), v(tp, bm, bj), v(te, bn, bk))))
            phi = (Trace(am, frozenset({bm, bn})), Trace(aj, frozenset({bj, bk})))
            return Triple(phi, (), omega)
        if isinstance(e, St):
            alpha, bm, bn = s.ident(), s.member(), s.member()
            wx = Strat(frozenset({alpha}), u.fresh_tvar(frozenset({bm})),
                       u.fresh_tvar(frozenset({bn})))
            inner_gamma = {k: v for k, v in gamma.items() if k != e.var}
            inner_sigma = dict(sigma)
            inner_sigma[e.var] = (wx, Trace(alpha, frozenset({bm, bn})))
            body = self.infer(e.body, inner_gamma, inner_sigma)
            out = dict(body.sigma)
            if e.var not in out:
                raise self.error(E003, f"strategy variable {e.var} is never used; strategy "
                                       "variables must be used exactly once", e)
            rest = tuple((x, t) for x, t in body.sigma if x != e.var)
            return Triple(body.phi, rest, Comb(out[e.var], body.omega))
        if isinstance(e, Var):
            if e.name in sigma:
                wx, trace = sigma[e.name]
                return Triple((trace,), ((e.name, wx),), wx)
            if e.name in gamma:
                return self.instantiate(gamma[e.name])
            raise self.error(E005, f"unbound variable {e.name}", e)
        if isinstance(e, CombApp):
            return self.infer_comb_app(e, gamma, sigma)
        if isinstance(e, Exec):
            return self.infer_exec(e, gamma, sigma)
        if isinstance(e, Succ):
            alpha = s.ident()
            ty = self.type_rule_body(alpha, {}, e.body)
            return Triple((Trace(alpha, frozenset()),), (), Result(frozenset({alpha}), ty))
        if isinstance(e, Fail):
            return Triple((), (), Result(NOANN, u.fresh_tvar()))
        if isinstance(e, Alt):
            left = self.infer(e.left, gamma, sigma)
            right = self.infer(e.right, gamma, sigma)
            for side, sub in ((left, e.left), (right, e.right)):
                if not isinstance(side.omega, Result):
                    raise self.error(E002, "both operands of ⋄ must be results, found "
                                           f"{kind_name(side.omega)}", sub)
            self.unify(left.omega, right.omega, e)
            left = self.zonk_triple(left)
            right = self.zonk_triple(right)
            return add(left, right)
        if isinstance(e, Let):
            return self.infer_let(e, gamma, sigma)
        if isinstance(e, (Unit, Pair, Label)):
            raise self.error(E002, "data must be wrapped in succ or passed to a strategy", e)
        raise TypeError(e)

    def unify(self, a: Type, b: Type, at: Term) -> None:
        try:
            self.uni.unify(erase(a), erase(b))
        except StructuralError as err:
            raise self.error(E002, f"structural type mismatch: {err}", at) from None

    def zonk_triple(self, t: Triple) -> Triple:
        z = self.uni.zonk
        return Triple(t.phi, tuple((x, z(w)) for x, w in t.sigma), z(t.omega))

    def _check_linear(self, f: Triple, a: Triple, at: Term) -> None:
        shared = {x for x, _ in f.sigma} & {x for x, _ in a.sigma}
        if shared:
            name = sorted(shared)[0]
            raise self.error(E003, f"strategy variable {name} is used more than once", at)

    def infer_comb_app(self, e: CombApp, gamma: dict, sigma: dict) -> Triple:
        f = self.infer(e.fn, gamma, sigma)
        a = self.infer(e.arg, gamma, sigma)
        if not isinstance(f.omega, Comb):
            raise self.error(E002, f"cannot apply {kind_name(f.omega)} to a strategy; "
                                   "only combinators take strategy arguments", e.fn)
        if not isinstance(a.omega, Strat):
            raise self.error(E002, f"combinator argument must be a strategy, found "
                                   f"{kind_name(a.omega)}", e.arg)
        self._check_linear(f, a, e)
        param = f.omega.param
        self.unify(param, a.omega, e)
        f, a = self.zonk_triple(f), self.zonk_triple(a)
        param, body = f.omega.param, f.omega.body
        stats = CompStats()
        out = comp_trace(f.phi, f.sigma, param, body, a.phi, a.sigma, a.omega,
                         self.supply, stats)
        self.stats.append((e, stats))
        if is_empty(out.omega):
            self._note_empty(e, f.phi, param, a.phi, a.omega, f.omega)
        return out

    def infer_exec(self, e: Exec, gamma: dict, sigma: dict) -> Triple:
        f = self.infer(e.strat, gamma, sigma)
        i = self.infer(e.inp, gamma, sigma)
        if isinstance(f.omega, Comb):
            raise self.error(E002, "a combinator cannot be executed; apply it to a strategy "
                                   "first", e.strat)
        if not isinstance(f.omega, Strat):
            raise self.error(E002, f"only strategies can be executed, found "
                                   f"{kind_name(f.omega)}", e.strat)
        if not isinstance(i.omega, Result):
            raise self.error(E002, f"execution input must be a result, found "
                                   f"{kind_name(i.omega)}", e.inp)
        if f.sigma or i.sigma:
            raise self.error(E002, "strategy variables cannot be executed inside a "
                                   "combinator body", e)
        if any(t.members for t in i.phi):
            raise self.error(E002, "execution input must be a closed result", e.inp)
        self.unify(f.omega.inp, i.omega.ty, e)
        f, i = self.zonk_triple(f), self.zonk_triple(i)
        ids = f.omega.ids
        wm = Result(ids, f.omega.inp)
        wc = Result(ids, f.omega.out)
        stats = CompStats()
        out = comp_trace(f.phi, (), wm, wc, i.phi, (), i.omega, self.supply, stats)
        self.stats.append((e, stats))
        if is_empty(out.omega):
            self._note_empty(e, f.phi, wm, i.phi, i.omega)
        return out

    def _note_empty(self, e: Term, phi_l, left: Type, phi_r, right: Type,
                    whole: Type | None = None) -> None:
        names = DisplayNames()
        if isinstance(whole, Comb) and isinstance(whole.body, Strat):
            # number members as they appear in the composition's own input
            render_side(phi_l, whole.body.ids & _ids(left), whole.body.inp, names)
        xs = render_side(phi_l, _ids(left), _input(left), names)
        ys = render_side(phi_r, _ids(right), _input(right), names)
        detail = ("There is no trace for the composed strategy type\n"
                  f"after unification of {xs} and {ys}")
        self._empty[id(e)] = (e, detail)

    def infer_let(self, e: Let, gamma: dict, sigma: dict) -> Triple:
        bound = self.infer(e.bound, gamma, {})
        if bound.sigma:
            raise self.error(E005, f"unbound variable {bound.sigma[0][0]}", e.bound)
        if not bound.phi:
            note = self._empty.pop(id(e.bound), None)
            what = _describe(e.bound)
            msg = MSG_E001.format(what=what)
            if note is not None:
                msg += "\n\n" + note[1]
            raise CheckError(self._diag("error", E001, msg, e.bound))
        bound = self.zonk_triple(bound)
        scheme = self.generalize(bound, sigma)
        inner = dict(gamma)
        inner[e.var] = scheme
        inner_sigma = {k: v for k, v in sigma.items() if k != e.var}
        return self.infer(e.body, inner, inner_sigma)

    def generalize(self, t: Triple, sigma: dict) -> Scheme:
        env_tv: set = set()
        env_rv: set = set()
        for wx, _ in sigma.values():
            tv, rv = free_type_vars(self.uni.zonk(wx))
            env_tv |= set(tv)
            env_rv |= set(rv)
        tv, rv = free_type_vars(t.omega)
        tv = tuple(x for x in tv if x not in env_tv)
        rv = tuple((x, self.uni.lacks_of(x)) for x in rv if x not in env_rv)
        return Scheme(t.phi, tv, rv, t.omega)

    def instantiate(self, sch: Scheme) -> Triple:
        tv = {x: self.uni.fresh_tvar().name for x in sch.tyvars}
        rv = {x: self.uni.fresh_row(lacks) for x, lacks in sch.rowvars}
        body = rename_vars(sch.body, tv, rv)
        return fresh(Triple(sch.phi, (), body), self.supply)


def _ids(t: Type) -> frozenset:
    return t.ids


def _input(t: Type) -> Traceable:
    return t.inp if isinstance(t, Strat) else t.ty


def _describe(e: Term) -> str:
    if isinstance(e, CombApp) and isinstance(e.fn, CombApp):
        if isinstance(e.fn.fn, Seq):
            return "sequential composition"
        if isinstance(e.fn.fn, Choice):
            return "choice composition"
    if isinstance(e, Exec):
        return "strategy execution"
    return "strategy"


# ------------------------------------------------------------ convenience


def infer_closed(term: Term, source: str | None = None) -> TypingResult:
    return Checker(source).check_program(term)


def check_against(term: Term, phi: tuple, omega: Type) -> bool:
    """Is ``omega`` (well-traced in ``phi``) derivable for the closed ``term``?

    Inference gives the minimal traced type; result types may additionally be
    padded with extra traces. An identifier-only trace padded onto an execution
    input composes into a trace with members on the output, so leftovers on a
    result type are not restricted to memberless ones.
    """
    chk = Checker()
    try:
        tri = chk.infer(term, {}, {})
    except CheckError:
        return False
    if tri.sigma or type(tri.omega) is not type(omega):
        return False
    # one-way structural match: variables of the expected type are rigid
    tv, rv = free_type_vars(omega)
    ren_t = {x: f"{x}'" for x in tv}
    ren_r = {x: f"{x}'" for x in rv}
    expected = rename_vars(omega, ren_t, ren_r)
    chk.uni.rigid = set(ren_t.values()) | set(ren_r.values())
    try:
        chk.uni.unify(erase(tri.omega), erase(expected))
    except StructuralError:
        return False
    got = chk.uni.zonk(tri.omega)
    if not types_equal(erase(got), erase(expected)):
        return False
    return traces_match(tri.phi, got, phi, expected)


def slice_of(phi: tuple, alpha: TraceVar, omega: Type) -> Type:
    return select({alpha}, Triple(phi, (), omega)).omega


def canonical_slice(phi: tuple, alpha: TraceVar, omega: Type) -> Type:
    """Slice along alpha with alpha and its members renamed canonically."""
    from .core import annotations, rename_traces
    sl = slice_of(phi, alpha, omega)
    m: dict = {}
    for v in annotations(sl):
        if v not in m:
            m[v] = TraceVar(-1 - len(m), v.member) if v != alpha else TraceVar(0, False)
    m[alpha] = TraceVar(0, False)
    return rename_traces(sl, m)


def traces_match(phi_a: tuple, a: Type, phi_b: tuple, b: Type) -> bool:
    """a's traces embed into b's with equal slices; only result types may have leftovers."""
    sa = [canonical_slice(phi_a, t.ident, a) for t in phi_a]
    sb = [canonical_slice(phi_b, t.ident, b) for t in phi_b]
    used = [False] * len(sb)
    for x in sa:
        for j, y in enumerate(sb):
            if not used[j] and types_equal(x, y):
                used[j] = True
                break
        else:
            return False
    if isinstance(a, Result):
        return True
    return all(used)
