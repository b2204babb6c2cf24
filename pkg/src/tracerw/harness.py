"""Random program generation and executable checks of the soundness theorems."""

from __future__ import annotations

import dataclasses
import json
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import probes
from .checker import check_against, infer_closed
from .core import (
    Alt, Choice, CombApp, Exec, Fail, Label, Let, PLabel, PPair, PUnit, PVar,
    Pair, Pattern, Result, Rule, Seq, St, Strat, Succ, Term, Unit, Var,
    is_comb_value, is_value, subst_term, term_to_json,
)
from .evaluator import FuelExhausted, Stuck, explore, match_pattern
from .syntax import print_surface
from .traces import Triple, select

THEOREMS = (
    "subject_reduction",
    "progress",
    "strong_normalization",
    "empty_result",
    "empty_strategy",
    "successful_rewrite",
    "successful_rule",
    "rule_substitution",
    "failed_rule",
    "seq_reduction",
    "unification",
    "pattern_matching",
    "enumeration",
)

OPS = ("Mul", "Add", "Sub", "Div")
VAR_NAMES = ("m", "n", "v", "w", "k", "p", "q", "x", "y", "z")


# ---------------------------------------------------------------- sizing


def _binop(e):
    if isinstance(e, (Label, PLabel)) and e.label == "Op":
        p = e.arg
        if isinstance(p, (Pair, PPair)) and isinstance(p.right, (Pair, PPair)):
            return p.left, p.right.left, p.right.right
    return None


def sugared_size(e) -> int:
    """Node count of the surface form: a binary operator or numeral is one node."""
    parts = _binop(e)
    if parts is not None:
        op, a, b = parts
        op_cost = 0 if isinstance(op, (Label, PLabel)) and isinstance(op.arg, (Unit, PUnit)) \
            else sugared_size(op)
        return 1 + op_cost + sugared_size(a) + sugared_size(b)
    if isinstance(e, (Label, PLabel)):
        if e.label[0].isdigit() and isinstance(e.arg, (Unit, PUnit)):
            return 1
        return 1 + sugared_size(e.arg)
    if isinstance(e, (Pair, PPair, Alt)):
        return 1 + sugared_size(e.left) + sugared_size(e.right)
    if isinstance(e, Rule):
        return 1 + sugared_size(e.pat) + sugared_size(e.body)
    if isinstance(e, CombApp):
        # a full seq/choice application is one binary node in the surface syntax
        if isinstance(e.fn, CombApp) and isinstance(e.fn.fn, (Seq, Choice)):
            return 1 + sugared_size(e.fn.arg) + sugared_size(e.arg)
        return 1 + sugared_size(e.fn) + sugared_size(e.arg)
    if isinstance(e, Exec):
        inp = e.inp.body if isinstance(e.inp, Succ) else e.inp
        return 1 + sugared_size(e.strat) + sugared_size(inp)
    if isinstance(e, (Succ,)):
        return 1 + sugared_size(e.body)
    if isinstance(e, St):
        return 1 + sugared_size(e.body)
    if isinstance(e, Let):
        return 1 + sugared_size(e.bound) + sugared_size(e.body)
    return 1


# ------------------------------------------------------------ generators


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.count = 0

    def fresh_var(self) -> str:
        self.count += 1
        return f"{self.rng.choice(VAR_NAMES)}{self.count}"

    def numeral(self) -> str:
        return str(self.rng.randrange(10))

    # rules

    def pattern(self, depth: int, opvars: list) -> Pattern:
        r = self.rng.random()
        if depth <= 0 or r < 0.3:
            return PVar(self.fresh_var()) if self.rng.random() < 0.6 \
                else PLabel(self.numeral(), PUnit())
        if self.rng.random() < 0.12:
            name = self.fresh_var()
            opvars.append(name)
            op: Pattern = PVar(name)
        else:
            op = PLabel(self.rng.choice(OPS), PUnit())
        return PLabel("Op", PPair(op, PPair(self.pattern(depth - 1, opvars),
                                            self.pattern(depth - 1, opvars))))

    def body(self, depth: int, vars_: list, opvars: list) -> Term:
        r = self.rng.random()
        if depth <= 0 or r < 0.45:
            if vars_ and self.rng.random() < 0.75:
                return Var(self.rng.choice(vars_))
            return Label(self.numeral(), Unit())
        if opvars and self.rng.random() < 0.5:
            op: Term = Var(self.rng.choice(opvars))
        else:
            op = Label(self.rng.choice(OPS), Unit())
        return Label("Op", Pair(op, Pair(self.body(depth - 1, vars_, opvars),
                                         self.body(depth - 1, vars_, opvars))))

    def rule(self, depth: int) -> Rule:
        if depth <= 0:
            return Rule(PUnit(), Unit())
        opvars: list = []
        pat = self.pattern(depth, opvars)
        vars_ = [v for v in _pvars(pat) if v not in opvars]
        return Rule(pat, self.body(self.rng.randrange(depth + 1), vars_, opvars))

    # strategies

    def strategy(self, budget: int) -> Term:
        r = self.rng.random()
        if budget < 10 or r < 0.3:
            return self.rule(self.rng.choice((1, 1, 2)))
        half = budget // 2
        if r < 0.58:
            return _seq(self.strategy(half), self.strategy(half))
        if r < 0.86:
            return _choice(self.strategy(half), self.strategy(half))
        # a user-defined combinator applied to a strategy
        s = "s"
        r1 = self.rule(1)
        template = self.rng.choice((
            lambda: _seq(r1, Var(s)), lambda: _seq(Var(s), r1),
            lambda: _choice(Var(s), r1), lambda: _choice(r1, Var(s)), lambda: Var(s)))()
        comb = St(s, template)
        arg = self.strategy(half)
        if self.rng.random() < 0.5:
            return Let("c", comb, CombApp(Var("c"), arg))
        return CombApp(comb, arg)

    # data

    def value(self, depth: int) -> Term:
        if depth <= 0 or self.rng.random() < 0.4:
            return Label(self.numeral(), Unit())
        return Label("Op", Pair(Label(self.rng.choice(OPS), Unit()),
                                Pair(self.value(depth - 1), self.value(depth - 1))))

    def instance(self, p: Pattern) -> Term:
        """A closed value matched by p (operator variables get operator labels)."""
        parts = _binop(p)
        if parts is not None and isinstance(parts[0], PVar):
            _, a, b = parts
            return Label("Op", Pair(Label(self.rng.choice(OPS), Unit()),
                                    Pair(self.instance(a), self.instance(b))))
        if isinstance(p, PVar):
            return self.value(1)
        if isinstance(p, PUnit):
            return Unit()
        if isinstance(p, PPair):
            return Pair(self.instance(p.left), self.instance(p.right))
        return Label(p.label, self.instance(p.arg))


def _pvars(p: Pattern) -> list:
    from .core import pattern_vars
    return pattern_vars(p)


def _seq(a: Term, b: Term) -> Term:
    return CombApp(CombApp(Seq(), a), b)


def _choice(a: Term, b: Term) -> Term:
    return CombApp(CombApp(Choice(), a), b)


def entry_rules(s: Term) -> list[Rule]:
    """Rules that may run first when s executes."""
    if isinstance(s, Rule):
        return [s]
    if isinstance(s, CombApp) and isinstance(s.fn, CombApp):
        if isinstance(s.fn.fn, Seq):
            return entry_rules(s.fn.arg)
        if isinstance(s.fn.fn, Choice):
            return entry_rules(s.fn.arg) + entry_rules(s.arg)
    if isinstance(s, CombApp) and isinstance(s.fn, St):
        return entry_rules(subst_term(s.fn.body, {s.fn.var: s.arg}))
    if isinstance(s, Let):
        return entry_rules(subst_term(s.body, {s.var: s.bound}))
    return []


def gen_rule(seed: int, depth: int) -> Rule:
    return _Gen(random.Random(seed)).rule(depth)


def gen_candidate(rng: random.Random, size: int) -> Term:
    g = _Gen(rng)
    strat = g.strategy(rng.randrange(8, size + 1))
    starts = entry_rules(strat)
    if starts and rng.random() < 0.8:
        inp: Term = Succ(g.instance(rng.choice(starts).pat))
    else:
        inp = Succ(g.value(rng.choice((0, 1, 2))))
    r = rng.random()
    if r < 0.06:
        inp = Fail()
    elif r < 0.14:
        inp = Alt(inp, Succ(g.value(1)))
    if rng.random() < 0.35:
        return Let("f", strat, Exec(Var("f"), inp))
    return Exec(strat, inp)


def gen_strategy_program(seed: int, size: int = 25, attempts: int = 400) -> Term:
    """A closed, error-free execution program of at most ``size`` surface nodes."""
    rng = random.Random(seed)
    for _ in range(attempts):
        prog = gen_candidate(rng, size)
        if sugared_size(prog) > size:
            continue
        if infer_closed(prog).ok:
            return prog
    raise RuntimeError(f"seed {seed}: no well-typed program found")


# ---------------------------------------------------------------- checking


@dataclass
class Verdict:
    checked: int = 0
    violations: list = field(default_factory=list)

    def fail(self, detail: str) -> None:
        self.violations.append(detail)


@dataclass
class ProgramReport:
    seed: int | None
    program: Term
    well_traced: bool = False
    verdicts: dict = field(default_factory=lambda: {t: Verdict() for t in THEOREMS})

    @property
    def violated(self) -> list[str]:
        return [t for t, v in self.verdicts.items() if v.violations]


def _typed(term: Term):
    r = infer_closed(term)
    return (r.phi, r.type) if r.ok else None


def check_theorems(program: Term, fuel: int | None = None, seed: int | None = None
                   ) -> ProgramReport:
    rep = ProgramReport(seed, program)
    v = rep.verdicts
    with probes.recording() as log:
        root = _typed(program)
        if root is None:
            raise ValueError("check_theorems needs a well-typed program")
        rep.well_traced = isinstance(root[1], Result) and bool(root[1].ids)
        v["strong_normalization"].checked += 1
        v["progress"].checked += 1
        try:
            ex = explore(program, fuel)
        except FuelExhausted as err:
            v["strong_normalization"].fail(str(err))
            return rep
        except Stuck as err:
            v["progress"].fail(str(err))
            return rep
        types: dict = {}
        for node in ex.edges:
            types[node] = _typed(node)
        for node, succs in ex.edges.items():
            if not is_value(node):
                v["progress"].checked += 1
                if not succs:
                    v["progress"].fail(print_surface(node))
            t = types[node]
            if t is None:
                continue
            phi, omega = t
            for nxt in succs:
                v["subject_reduction"].checked += 1
                if not check_against(nxt, phi, omega):
                    v["subject_reduction"].fail(f"{print_surface(node)}  ~>  {print_surface(nxt)}")
            if isinstance(omega, Result):
                outs = ex.reachable_outcomes(node)
                if not omega.ids:
                    v["empty_result"].checked += 1
                    if outs != {Fail()}:
                        v["empty_result"].fail(print_surface(node))
                else:
                    v["successful_rewrite"].checked += 1
                    if not any(isinstance(o, Succ) for o in outs):
                        v["successful_rewrite"].fail(print_surface(node))
            if isinstance(node, Exec) and is_value(node.strat) and is_value(node.inp):
                _check_exec(node, phi, omega, ex, v)
    v["unification"].checked = log.unify_ok
    for a, b, s in log.unify_violations:
        v["unification"].fail(f"{a} ~ {b} under {s}")
    v["pattern_matching"].checked = log.match_ok
    for p, val, s in log.match_violations:
        v["pattern_matching"].fail(f"{p} against {val}")
    return rep


def _check_exec(node: Exec, phi, omega, ex, v) -> None:
    f, i = node.strat, node.inp
    ftype = _typed(f)
    outs = ex.reachable_outcomes(node)
    if ftype is not None and isinstance(ftype[1], Strat) and not ftype[1].ids:
        v["empty_strategy"].checked += 1
        if outs != {Fail()}:
            v["empty_strategy"].fail(print_surface(node))
    if isinstance(f, Rule) and isinstance(i, Succ):
        s = match_pattern(f.pat, i.body)
        if omega.ids:
            v["successful_rule"].checked += 1
            if s is None:
                v["successful_rule"].fail(print_surface(node))
        else:
            v["failed_rule"].checked += 1
            if s is not None:
                v["failed_rule"].fail(print_surface(node))
        if s is not None:
            v["rule_substitution"].checked += 1
            if not check_against(Succ(subst_term(f.body, s)), phi, omega):
                v["rule_substitution"].fail(print_surface(node))
    if isinstance(f, CombApp) and isinstance(f.fn, CombApp) and isinstance(f.fn.fn, Seq):
        v["seq_reduction"].checked += 1
        rhs = Exec(f.arg, Exec(f.fn.arg, i))
        if not check_against(rhs, phi, omega):
            v["seq_reduction"].fail(print_surface(node))
    if is_comb_value(f) and isinstance(f, CombApp) and isinstance(f.fn, CombApp) \
            and isinstance(i, Succ):
        succs = [o for o in outs if isinstance(o, Succ)]
        for alpha in [t.ident for t in phi if t.ident in omega.ids]:
            v["enumeration"].checked += 1
            sl = select({alpha}, Triple(phi, (), omega))
            if not any(check_against(o, sl.phi, sl.omega) for o in succs):
                v["enumeration"].fail(f"{print_surface(node)} (trace {alpha!r})")


# ---------------------------------------------------------------- shrinking


def _replacements(e: Term):
    """Terms obtained by replacing one subterm of e with one of its descendants."""
    from .core import children, subterms
    for sub in list(children(e)):
        for d in subterms(sub):
            yield d
    for fname in ("fn", "arg", "strat", "inp", "left", "right", "body", "bound"):
        if fname in getattr(e, "__dataclass_fields__", {}):
            child = getattr(e, fname)
            if isinstance(child, (PVar, PUnit, PPair, PLabel)):
                continue
            for r in _replacements(child):
                yield dataclasses.replace(e, **{fname: r})


def shrink(program: Term, theorem: str, fuel: int | None = None, budget: int = 400) -> Term:
    """Greedy delta-debugging: keep any single replacement that preserves the violation."""
    current = program
    tries = 0
    progress = True
    while progress and tries < budget:
        progress = False
        for cand in _replacements(current):
            tries += 1
            if tries >= budget:
                break
            if sugared_size(cand) >= sugared_size(current) or not infer_closed(cand).ok:
                continue
            try:
                rep = check_theorems(cand, fuel)
            except ValueError:
                continue
            if rep.verdicts[theorem].violations:
                current = cand
                progress = True
                break
    return current


# ---------------------------------------------------------------- driver


def _run_one(args) -> dict:
    seed, size, fuel_factor = args
    prog = gen_strategy_program(seed, size)
    fuel = fuel_factor * sugared_size(prog)
    rep = check_theorems(prog, fuel, seed)
    return {
        "seed": seed,
        "size": sugared_size(prog),
        "well_traced": rep.well_traced,
        "counts": {t: (vd.checked, len(vd.violations)) for t, vd in rep.verdicts.items()},
        "violations": {t: vd.violations[:3] for t, vd in rep.verdicts.items() if vd.violations},
    }


def run(seeds: int = 1000, size: int = 25, fuel_factor: int = 10_000, workers: int | None = None,
        first_seed: int = 0) -> dict:
    start = time.time()
    jobs = [(s, size, fuel_factor) for s in range(first_seed, first_seed + seeds)]
    workers = workers if workers is not None else min(8, os.cpu_count() or 1)
    if workers > 1 and seeds > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=8))
    else:
        results = [_run_one(j) for j in jobs]
    totals = {t: {"checked": 0, "violations": 0} for t in THEOREMS}
    counterexamples = []
    for r in results:
        for t, (c, n) in r["counts"].items():
            totals[t]["checked"] += c
            totals[t]["violations"] += n
    for r in results:
        for t, details in r["violations"].items():
            prog = gen_strategy_program(r["seed"], size)
            small = shrink(prog, t, fuel_factor * sugared_size(prog))
            counterexamples.append({
                "theorem": t, "seed": r["seed"], "details": details,
                "program": print_surface(prog), "shrunk": print_surface(small),
                "term": term_to_json(small),
            })
    return {
        "config": {"seeds": seeds, "size": size, "fuel_factor": fuel_factor,
                   "first_seed": first_seed},
        "programs": len(results),
        "max_size": max((r["size"] for r in results), default=0),
        "well_traced_rate": sum(r["well_traced"] for r in results) / max(1, len(results)),
        "theorems": totals,
        "violations": sum(t["violations"] for t in totals.values()),
        "counterexamples": counterexamples,
        "seconds": round(time.time() - start, 2),
    }


def write_report(report: dict, path: str | os.PathLike) -> tuple[Path, Path]:
    """Write the JSON report and a bar chart of per-theorem checks next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2))
    png = path.with_suffix(".png")
    plot_report(report, png)
    return path, png


def plot_report(report: dict, out: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(report["theorems"])
    checked = [report["theorems"][n]["checked"] for n in names]
    bad = [report["theorems"][n]["violations"] for n in names]
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ys = range(len(names))
    ax.barh(ys, checked, color="#4c72b0", label="checked")
    ax.barh(ys, bad, color="#c44e52", label="violations")
    ax.set_yticks(list(ys))
    ax.set_yticklabels([n.replace("_", " ") for n in names])
    ax.invert_yaxis()
    ax.set_xscale("symlog")
    ax.set_xlabel("instances (log scale)")
    ax.set_title(f"{report['programs']} programs, {report['violations']} violations")
    ax.legend(loc="lower right", frameon=False)
    for y, c in zip(ys, checked):
        ax.text(max(c, 1), y, f" {c}", va="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
