"""Command-line driver: ``tracerw check|eval|harness``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .checker import Diagnostic, infer_closed
from .core import Result, Span, term_to_json
from .evaluator import FuelExhausted, Stuck, evaluate_all, evaluate_sample
from .render import render_formal
from .syntax import ParseError, parse_program, show_value

EXIT_OK = 0
EXIT_TYPE = 1
EXIT_DENIED = 2
EXIT_PARSE = 3
EXIT_IO = 4


def _color() -> bool:
    return os.environ.get("ELV_COLOR", "1") != "0" and sys.stdout.isatty()


def _paint(text: str, code: str) -> str:
    return f"\x1b[{code}m{text}\x1b[0m" if _color() else text


def _line_col(src: str, pos: int) -> tuple[int, int]:
    line = src.count("\n", 0, pos) + 1
    col = pos - (src.rfind("\n", 0, pos) + 1) + 1
    return line, col


def underline(src: str, span: Span | None, message: str, label: str) -> str:
    """Point at span with ^~~~ under its first line and indent the message below it."""
    if span is None:
        return f"{label}: {message}"
    lines = src.split("\n")
    line_no, col = _line_col(src, min(span.start, len(src)))
    line = lines[min(line_no, len(lines)) - 1]
    col = min(col, len(line) + 1)
    end = min(span.end, span.start + len(line) - col + 1)
    width = max(1, end - span.start)
    gutter = f"{line_no} | "
    pad = " " * (len(gutter) + col - 1)
    marks = _paint("^" + "~" * (width - 1), "1;33" if label.startswith("warning") else "1;31")
    head, *rest = message.split("\n")
    out = [gutter + line, pad + marks, f"{pad}{label}: {head}"]
    indent = pad + " " * (len(label) + 2)
    out += [indent + r if r else "" for r in rest]
    return "\n".join(out)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _parse_or_report(args, src: str):
    try:
        return parse_program(src), None
    except ParseError as err:
        if args.json:
            print(json.dumps({"file": args.path, "ok": False, "exit": EXIT_PARSE,
                              "parse_error": {"message": err.message,
                                              "span": [err.span.start, err.span.end]}}))
        else:
            print(underline(src, err.span, err.message, "parse error"), file=sys.stderr)
        return None, EXIT_PARSE


def _label(d: Diagnostic) -> str:
    return f"{d.severity}[{d.code}]"


def cmd_check(args) -> int:
    try:
        src = _read(args.path)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    term, code = _parse_or_report(args, src)
    if term is None:
        return code
    res = infer_closed(term, src)
    warnings = [d for d in res.diagnostics if d.severity == "warning"]
    if not res.ok:
        code = EXIT_TYPE
    elif warnings and args.deny_warnings:
        code = EXIT_DENIED
    else:
        code = EXIT_OK
    if args.json:
        out = {"file": args.path, "ok": res.ok, "exit": code,
               "diagnostics": [d.to_json() for d in res.diagnostics]}
        if res.ok:
            out["type"] = res.rendered()
            out["formal"] = render_formal(res.type, res.phi)
        print(json.dumps(out, ensure_ascii=False, indent=2))
        return code
    for d in res.diagnostics:
        print(underline(src, d.span, d.message, _label(d)), file=sys.stderr)
    if res.ok:
        print(render_formal(res.type, res.phi) if args.formal else res.rendered())
    return code


def cmd_eval(args) -> int:
    try:
        src = _read(args.path)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    term, code = _parse_or_report(args, src)
    if term is None:
        return code
    res = infer_closed(term, src)
    if not res.ok or not isinstance(res.type, Result):
        for d in res.diagnostics:
            if d.severity == "error":
                print(underline(src, d.span, d.message, _label(d)), file=sys.stderr)
        if res.ok:
            print("error: only an execution or result expression can be evaluated",
                  file=sys.stderr)
        return EXIT_TYPE
    try:
        if args.sample is not None:
            outcomes = [evaluate_sample(term, args.sample, args.fuel)]
        else:
            outcomes = evaluate_all(term, args.fuel)
    except (FuelExhausted, Stuck) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_TYPE
    shown = sorted(show_value(v) for v in outcomes)
    if args.json:
        print(json.dumps({"file": args.path, "exit": EXIT_OK, "outcomes": shown,
                          "terms": [term_to_json(v) for v in outcomes]},
                         ensure_ascii=False, indent=2))
    else:
        print("\n".join(shown))
    return EXIT_OK


def cmd_harness(args) -> int:
    from .harness import run, write_report

    report = run(seeds=args.seeds, size=args.size, fuel_factor=args.fuel or 10_000,
                 workers=args.workers)
    if args.report:
        js, png = write_report(report, args.report)
        print(f"report written to {js} and {png}", file=sys.stderr)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        width = max(len(t) for t in report["theorems"])
        for name, t in report["theorems"].items():
            status = "ok" if not t["violations"] else _paint("VIOLATED", "1;31")
            print(f"{name.ljust(width)}  {t['checked']:>7} checked  {status}")
        print(f"{report['programs']} programs, well-traced rate "
              f"{report['well_traced_rate']:.2f}, {report['seconds']}s")
        for c in report["counterexamples"]:
            print(f"counterexample ({c['theorem']}, seed {c['seed']}): {c['shrunk']}")
    return EXIT_OK if report["violations"] == 0 else EXIT_TYPE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tracerw", description="Trace-typed rewriting strategies")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="type-check a program")
    c.add_argument("path")
    c.add_argument("--json", action="store_true")
    c.add_argument("--formal", action="store_true", help="print the full traced type")
    c.add_argument("--deny-warnings", action="store_true")
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("eval", help="evaluate an execution")
    e.add_argument("path")
    e.add_argument("--json", action="store_true")
    e.add_argument("--all", action="store_true", help="print every outcome (default)")
    e.add_argument("--sample", type=int, metavar="SEED", help="follow one random reduction path")
    e.add_argument("--fuel", type=int, help="step budget (default 10000 x term size)")
    e.set_defaults(func=cmd_eval)

    h = sub.add_parser("harness", help="run the metatheory suite")
    h.add_argument("--seeds", type=int, default=1000)
    h.add_argument("--size", type=int, default=25)
    h.add_argument("--fuel", type=int, help="fuel per node of program size (default 10000)")
    h.add_argument("--workers", type=int, default=None)
    h.add_argument("--report", metavar="PATH", help="write JSON report and PNG chart")
    h.add_argument("--json", action="store_true")
    h.set_defaults(func=cmd_harness)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
