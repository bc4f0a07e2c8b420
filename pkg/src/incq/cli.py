"""Command line: ``incq compile``, ``incq run`` and ``incq bench``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .bench import COLUMNS, DEFAULT_MODES, bench, exponents, write_csv, write_fits
from .dump import objplan_to_json, plan_to_json, relational_to_json, results_to_json
from .errors import IncqError
from .parser import ParseError, parse_program
from .planner import parse_hints
from .runtime import MODES, Runtime, compile_query
from .wellformed import check_script


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _write_json(obj, path: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _load(path: str):
    return parse_program(Path(path).read_text())


def cmd_compile(args) -> int:
    script = _load(args.file)
    hints = parse_hints(Path(args.hints).read_text()) if args.hints else None
    plans, objplans, rels = [], [], []
    for q in script.queries:
        rq, plan, obj = compile_query(q, args.mode, args.strategy, hints, script.trace, not args.no_count_elim)
        rels.append(relational_to_json(rq))
        plans.append(plan_to_json(plan))
        objplans.append(objplan_to_json(obj))
    if args.dump_relational:
        _write_json(rels, "-")
    if args.dump_plan:
        _write_json(plans, args.dump_plan)
    if args.dump_objplan:
        _write_json(objplans, args.dump_objplan)
    if not (args.dump_relational or args.dump_plan or args.dump_objplan):
        for p in plans:
            print(f"{p['query']}: {len(p['handlers'])} handlers, stores "
                  + ", ".join(s["rel"] for s in p["stores"]))
    return 0


def cmd_run(args) -> int:
    script = _load(args.file)
    problems = check_script(script)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    rt = Runtime(script, args.mode, auto_demand=args.auto_demand, check_against=args.check_against,
                 trace_log=args.trace_log, per_op_stats=bool(args.stats))
    try:
        rt.run()
    finally:
        for a in rt.asks:
            shown = ", ".join(results_to_json(a.result))
            print(f"{a.query}({_args(a.args)}) = {{{shown}}}")
        if args.trace_log:
            for bid in rt.trace_log:
                print(f"handler {bid}", file=sys.stderr)
        if args.stats:
            _write_json(rt.stats(), args.stats)
    return 0


def _args(values) -> str:
    from .heap import show_value

    return ", ".join(show_value(v) for v in values)


def cmd_bench(args) -> int:
    modes = args.modes.split(",") if args.modes else DEFAULT_MODES[args.scenario]
    rows = bench(args.scenario, _ints(args.sizes), _ints(args.seeds), modes, wallclock=args.wallclock)
    fits = exponents(rows)
    if args.out:
        write_csv(rows, args.out)
        write_fits(fits, args.scenario, str(args.out) + ".fits.csv")
    else:
        write_csv(rows, "/dev/stdout")
    for (mode, col), e in fits.items():
        if col in COLUMNS:
            print(f"# {args.scenario} {mode} {col} exponent {e:.3f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="incq", description="Incremental object queries with demand.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="lower and plan the queries of a program")
    c.add_argument("file")
    c.add_argument("--mode", choices=("inc", "fil"), required=True)
    c.add_argument("--strategy", choices=("ours", "osq"), default="ours")
    c.add_argument("--hints")
    c.add_argument("--dump-relational", action="store_true")
    c.add_argument("--dump-plan", metavar="P")
    c.add_argument("--dump-objplan", metavar="P")
    c.add_argument("--no-count-elim", action="store_true")
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("run", help="execute a program's trace")
    r.add_argument("file")
    r.add_argument("--mode", choices=MODES, default="orig")
    r.add_argument("--auto-demand", action="store_true")
    r.add_argument("--check-against", choices=("orig",))
    r.add_argument("--stats", metavar="S")
    r.add_argument("--trace-log", action="store_true")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="counter benchmarks with growth fits")
    b.add_argument("scenario", choices=tuple(DEFAULT_MODES))
    b.add_argument("--sizes", required=True)
    b.add_argument("--seeds", default="1")
    b.add_argument("--modes")
    b.add_argument("--out")
    b.add_argument("--wallclock", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as err:
        for e in err.errors:
            print(f"{args.file}:{e.line}:{e.col}: {e.message}", file=sys.stderr)
        return 2
    except IncqError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
