"""Small-step nondeterministic semantics and outcome enumeration."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace

from . import probes
from .core import (
    Alt, Choice, CombApp, Exec, Fail, Label, Let, PLabel, PPair, PUnit, PVar,
    Pair, Pattern, Rule, Seq, St, Succ, Term, Unit, is_value, p2e, subst_term,
    term_size,
)

FAIL_PAT = None  # failed pattern match


class FuelExhausted(RuntimeError):
    pass


class Stuck(RuntimeError):
    """A closed non-value with no successor; signals a soundness bug."""


def match_pattern(p: Pattern, v: Term):
    s = _match(p, v)
    log = probes.current()
    if log is not None:
        if s is None:
            log.match_fail += 1
        else:
            log.match_ok += 1
            if subst_term(p2e(p), s) != v:
                log.match_violations.append((p, v, s))
    return s


def _match(p: Pattern, v: Term):
    if isinstance(p, PVar):
        return {p.name: v}
    if isinstance(p, PUnit):
        return {} if isinstance(v, Unit) else FAIL_PAT
    if isinstance(p, PLabel):
        if isinstance(v, Label) and v.label == p.label:
            return _match(p.arg, v.arg)
        return FAIL_PAT
    if isinstance(p, PPair):
        if not isinstance(v, Pair):
            return FAIL_PAT
        left = _match(p.left, v.left)
        if left is None:
            return FAIL_PAT
        right = _match(p.right, v.right)
        if right is None:
            return FAIL_PAT
        return {**left, **right}
    raise TypeError(p)


def _reduce_root(e: Term) -> list[Term]:
    """Every notion of reduction applicable at the root."""
    if isinstance(e, Exec) and is_value(e.strat) and is_value(e.inp):
        f, i = e.strat, e.inp
        if isinstance(i, Fail):
            return [Fail()]
        out = []
        if isinstance(f, CombApp) and isinstance(f.fn, CombApp):
            head = f.fn.fn
            a, b = f.fn.arg, f.arg
            if isinstance(head, Seq):
                out.append(Exec(b, Exec(a, i)))
            elif isinstance(head, Choice):
                out.append(Alt(Exec(a, i), Exec(b, i)))
        elif isinstance(f, Rule) and isinstance(i, Succ):
            s = match_pattern(f.pat, i.body)
            out.append(Fail() if s is None else Succ(subst_term(f.body, s)))
        return out
    if isinstance(e, Alt) and is_value(e.left) and is_value(e.right):
        a, b = e.left, e.right
        if isinstance(a, Fail) and isinstance(b, Fail):
            return [Fail()]
        if isinstance(a, Fail) and isinstance(b, Succ):
            return [b]
        if isinstance(a, Succ) and isinstance(b, Fail):
            return [a]
        if isinstance(a, Succ) and isinstance(b, Succ):
            return [a] if a == b else [a, b]
        return []
    if isinstance(e, CombApp) and isinstance(e.fn, St) and is_value(e.arg):
        return [subst_term(e.fn.body, {e.fn.var: e.arg})]
    if isinstance(e, Let) and is_value(e.bound):
        return [subst_term(e.body, {e.var: e.bound})]
    return []


def step_all(e: Term) -> list[Term]:
    """All one-step successors, over every redex the context grammar exposes."""
    out = _reduce_root(e)
    if isinstance(e, CombApp):
        if not is_value(e.fn):
            out += [replace(e, fn=x) for x in step_all(e.fn)]
        elif not is_value(e.arg):
            out += [replace(e, arg=x) for x in step_all(e.arg)]
    elif isinstance(e, Exec):
        if not is_value(e.strat):
            out += [replace(e, strat=x) for x in step_all(e.strat)]
        elif not is_value(e.inp):
            out += [replace(e, inp=x) for x in step_all(e.inp)]
    elif isinstance(e, Alt):
        if not is_value(e.left):
            out += [replace(e, left=x) for x in step_all(e.left)]
        elif not is_value(e.right):
            out += [replace(e, right=x) for x in step_all(e.right)]
    elif isinstance(e, Pair):
        if not is_value(e.left):
            out += [replace(e, left=x) for x in step_all(e.left)]
        elif not is_value(e.right):
            out += [replace(e, right=x) for x in step_all(e.right)]
    elif isinstance(e, Label):
        out += [replace(e, arg=x) for x in step_all(e.arg)]
    elif isinstance(e, Succ):
        out += [replace(e, body=x) for x in step_all(e.body)]
    elif isinstance(e, Let) and not is_value(e.bound):
        out += [replace(e, bound=x) for x in step_all(e.bound)]
    seen: set = set()
    uniq = []
    for x in out:
        if x not in seen:
            seen.add(x)
            uniq.append(x)
    return uniq


@dataclass
class Exploration:
    """Reachable fragment of the reduction graph from a root term."""
    root: Term
    edges: dict = field(default_factory=dict)  # term -> list of successors
    outcomes: set = field(default_factory=set)
    steps: int = 0

    def reachable_outcomes(self, t: Term) -> set:
        memo: dict = {}
        order = [t]
        stack = [t]
        seen = {t}
        while stack:
            x = stack.pop()
            for y in self.edges.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    order.append(y)
                    stack.append(y)
        # reduction graph is acyclic under normalization; fold in reverse
        for x in reversed(order):
            succ = self.edges.get(x, ())
            if not succ:
                memo[x] = {x} if is_value(x) else set()
            else:
                acc: set = set()
                for y in succ:
                    acc |= memo.get(y, set())
                memo[x] = acc
        return memo[t]


def explore(e: Term, fuel: int | None = None) -> Exploration:
    fuel = fuel if fuel is not None else default_fuel(e)
    ex = Exploration(e)
    frontier = deque([e])
    seen = {e}
    while frontier:
        t = frontier.popleft()
        ex.steps += 1
        if ex.steps > fuel:
            raise FuelExhausted(f"no normal form within {fuel} steps")
        nxt = step_all(t)
        ex.edges[t] = nxt
        if not nxt:
            if not is_value(t):
                raise Stuck(f"stuck term {t}")
            ex.outcomes.add(t)
        for x in nxt:
            if x not in seen:
                seen.add(x)
                frontier.append(x)
    return ex


def default_fuel(e: Term) -> int:
    return 10_000 * term_size(e)


def evaluate_all(e: Term, fuel: int | None = None) -> set[Term]:
    return explore(e, fuel).outcomes


def evaluate_sample(e: Term, seed: int, fuel: int | None = None) -> Term:
    fuel = fuel if fuel is not None else default_fuel(e)
    rng = random.Random(seed)
    for _ in range(fuel):
        nxt = step_all(e)
        if not nxt:
            if not is_value(e):
                raise Stuck(f"stuck term {e}")
            return e
        e = rng.choice(nxt)
    raise FuelExhausted(f"no normal form within {fuel} steps")
