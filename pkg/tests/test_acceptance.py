"""Acceptance criteria, one PASS/FAIL line each.

Pinned tolerances:
  type checking of each golden program   < 1.0 s
  metatheory suite                       >= 1000 programs, size <= 25,
                                         fuel 10000 x size, < 300 s, 0 violations
  engine properties                      200 random triples for Select/Delete
  round trip                             500 generated programs, exact equality
"""

import random
import time

import pytest

from conftest import PROGRAMS, canonical, random_triple, source
from tracerw.checker import E001, W001, canonical_slice, infer_closed
from tracerw.cli import main
from tracerw.core import Supply, annotations, env_ids, erase
from tracerw.evaluator import evaluate_all
from tracerw.harness import gen_candidate, run
from tracerw.syntax import parse_program, print_surface, show_value
from tracerw.traces import AddError, Triple, add, delete, fresh, select

CHECK_SECONDS = 1.0
SUITE_SEEDS = 1000
SUITE_SIZE = 25
SUITE_FUEL = 10_000
SUITE_SECONDS = 300.0
DUALITY_TRIPLES = 200
ROUND_TRIP_PROGRAMS = 500

GOLDEN = {
    "e1": "{d,e}: d0*1 | e0*2 → d0 | e0+e0",
    "e2": "▶{c} 10",
    "e3": "{e,f}: e0*1 | f0+0 → e0 | f0",
    "e4": "({a}: (a0 a2 a1) → a3) ⇒ ({a}: (a1 a2 a0) → a3)",
    "e5": "{a}: 1*a0 → a0",
    "e8": "{d}: 1*(d0+d1) → 1*(d1+d0)",
}

SUITE_THEOREMS = (
    "subject_reduction", "progress", "strong_normalization", "empty_result",
    "successful_rewrite", "enumeration", "unification", "pattern_matching",
)


def verdict(capsys, label, failures):
    with capsys.disabled():
        status = "PASS" if not failures else "FAIL"
        detail = "" if not failures else "  <- " + "; ".join(failures)
        print(f"\n[{status}] {label}{detail}")
    assert not failures, "; ".join(failures)


def test_ac1_golden_types(capsys):
    failures = []
    for name, expected in GOLDEN.items():
        start = time.perf_counter()
        res = infer_closed(parse_program(source(name)))
        took = time.perf_counter() - start
        got = res.rendered() if res.ok else "<type error>"
        if canonical(got) != canonical(expected):
            failures.append(f"{name}: got {got!r}, expected {expected!r}")
        if took >= CHECK_SECONDS:
            failures.append(f"{name}: {took:.2f}s")
    verdict(capsys, "AC1 golden types of examples 1-5 and 8 (each < 1 s)", failures)


def _cli(capsys, *argv):
    code = main(list(argv))
    capsys.readouterr()
    return code


def test_ac2_diagnostics(capsys):
    failures = []
    src = source("e5")
    res = infer_closed(parse_program(src), src)
    warns = [d for d in res.diagnostics if d.code == W001]
    if len(warns) != 1 or not res.ok:
        failures.append(f"e5: expected one W001, got {[d.code for d in res.diagnostics]}")
    elif src[warns[0].span.start:warns[0].span.end] != \
            "(rule m + n -> n + m ; rule m * n -> n * m)":
        failures.append("e5: warning not on the left seq subterm")
    if _cli(capsys, "check", str(PROGRAMS / "e5.elv")) != 0:
        failures.append("e5 exit code")
    if _cli(capsys, "check", "--deny-warnings", str(PROGRAMS / "e5.elv")) != 2:
        failures.append("e5 --deny-warnings exit code")
    for name in ("e6", "e7"):
        s = source(name)
        r = infer_closed(parse_program(s), s)
        errs = [d for d in r.diagnostics if d.severity == "error"]
        if [d.code for d in errs] != [E001]:
            failures.append(f"{name}: expected E001, got {[d.code for d in errs]}")
        elif not s[:errs[0].span.start].rstrip().endswith("="):
            failures.append(f"{name}: E001 not at the let-bound expression")
        if _cli(capsys, "check", str(PROGRAMS / f"{name}.elv")) != 1:
            failures.append(f"{name} exit code")
    verdict(capsys, "AC2 diagnostics (W001 on e5, E001 on e6/e7, exit codes 0/1/2)", failures)


def test_ac3_evaluation(capsys):
    failures = []
    e2 = {show_value(v) for v in evaluate_all(parse_program(source("e2")))}
    if e2 != {"succ 10"}:
        failures.append(f"e2 outcomes {sorted(e2)}")
    e8 = {show_value(v) for v in evaluate_all(parse_program(source("e8_eval")))}
    if "succ (1*(4+3))" not in e8:
        failures.append(f"e8 on 1*(3+4): outcomes {sorted(e8)} lack succ (1*(4+3))")
    verdict(capsys, "AC3 evaluation goldens (e2 = {succ 10}; e8 reaches succ (1*(4+3)))", failures)


def test_ac4_metatheory_suite(capsys):
    start = time.perf_counter()
    report = run(seeds=SUITE_SEEDS, size=SUITE_SIZE, fuel_factor=SUITE_FUEL)
    took = time.perf_counter() - start
    failures = []
    if report["programs"] < SUITE_SEEDS:
        failures.append(f"only {report['programs']} programs")
    if report["max_size"] > SUITE_SIZE:
        failures.append(f"program of size {report['max_size']}")
    for name in SUITE_THEOREMS:
        t = report["theorems"][name]
        if t["violations"]:
            failures.append(f"{name}: {t['violations']} violations")
        if t["checked"] == 0:
            failures.append(f"{name}: never exercised")
    if took >= SUITE_SECONDS:
        failures.append(f"runtime {took:.0f}s")
    others = sum(report["theorems"][n]["violations"] for n in report["theorems"]
                 if n not in SUITE_THEOREMS)
    if others:
        failures.append(f"{others} violations of the remaining lemmas")
    label = (f"AC4 metatheory suite ({report['programs']} programs, "
             f"well-traced {report['well_traced_rate']:.0%}, {took:.0f}s, 0 violations)")
    verdict(capsys, label, failures)


def _comp_stats(name):
    res = infer_closed(parse_program(source(name)))
    return res.stats[-1][1]


def test_ac5_engine_properties(capsys):
    failures = []
    rng = random.Random(2024)
    for seed in range(DUALITY_TRIPLES):
        tri = random_triple(seed)
        ids = env_ids(tri.phi)
        chosen = {a for a in ids if rng.random() < 0.5}
        kept, dropped = select(chosen, tri), delete(chosen, tri)
        if delete(chosen, tri) != select(set(ids) - chosen, tri) \
                or add(kept, dropped).omega != tri.omega \
                or set(add(kept, dropped).phi) != set(tri.phi):
            failures.append(f"select/delete duality, triple {seed}")
            break
    for seed in range(50):
        tri = random_triple(seed)
        out = fresh(tri, Supply())
        slices = sorted(repr(canonical_slice(tri.phi, a, tri.omega)) for a in env_ids(tri.phi))
        again = sorted(repr(canonical_slice(out.phi, a, out.omega)) for a in env_ids(out.phi))
        used = set(annotations(out.omega))
        if slices != again or any(not t.members <= used for t in out.phi):
            failures.append(f"fresh, triple {seed}")
            break
        if erase(erase(tri.omega)) != erase(tri.omega):
            failures.append(f"erase idempotence, triple {seed}")
            break
        other = random_triple(seed + 1000)
        if erase(other.omega) != erase(tri.omega):
            try:
                add(fresh(other, Supply()), Triple(tuple(), (), erase(tri.omega)))
                failures.append(f"add accepted mismatched erasures, triple {seed}")
                break
            except AddError:
                pass
    for name, expected in (("e3", (4, 2)), ("e7", (4, 0))):
        st = _comp_stats(name)
        if (st.iterations, st.successes) != expected:
            failures.append(f"{name} compTrace {(st.iterations, st.successes)} != {expected}")
    verdict(capsys, "AC5 engine properties (select/delete, fresh, add, erase, compTrace 4/2 and 4/0)",
            failures)


def test_ac6_round_trip(capsys):
    failures = []
    for seed in range(ROUND_TRIP_PROGRAMS):
        prog = gen_candidate(random.Random(seed), SUITE_SIZE)
        if parse_program(print_surface(prog)) != prog:
            failures.append(f"seed {seed}: {print_surface(prog)}")
    verdict(capsys, f"AC6 frontend round trip ({ROUND_TRIP_PROGRAMS} programs)", failures[:3])
