"""Command-line entry point.

Exit codes separate domain outcomes from tool errors: 0 success,
1 chase failure / no solution / check answered no, 2 parse error,
3 validation or construction error, 4 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .certain import certain_answers
from .chase import chase_mapping
from .compose import ComposeError, collapse_chain, compose_chain, decompose_stso
from .denest import DepthExceeded, denest_sotgd_depth2, denest_stso
from .deps import (
    Mapping,
    NotWeaklyAcyclic,
    StSODependency,
    skolemize,
    validate,
)
from .oracle import (
    Budget,
    chain_member,
    check_equiv,
    enumerate_solutions,
)
from .syntax import (
    ParseError,
    ValidationError,
    dumps,
    instance_to_json,
    parse_instance,
    parse_mapping,
    parse_query,
    render_instance,
    render_mapping,
)
from .values import BudgetExceeded

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_BUDGET = 4


def _color_enabled() -> bool:
    env = os.environ.get("MAPFORGE_COLOR")
    if env == "0":
        return False
    if env == "1":
        return True
    return sys.stderr.isatty()


def _tinted(text: str, code: str) -> str:
    if _color_enabled():
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _err(message: str) -> None:
    print(_tinted(message, "31"), file=sys.stderr)


def _warn(message: str) -> None:
    print(_tinted(message, "33"), file=sys.stderr)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_mapping(path: str) -> Mapping:
    return parse_mapping(_read(path), file=path)


def _budget(args) -> Budget:
    kwargs = {}
    if getattr(args, "budget_nulls", None) is not None:
        kwargs["max_universe_nulls"] = args.budget_nulls
    if getattr(args, "budget_ms", None) is not None:
        kwargs["max_millis"] = args.budget_ms
    return Budget(**kwargs)


def _emit(args, payload: dict, text: str) -> None:
    out = dumps(payload) if args.json else text.rstrip("\n")
    if getattr(args, "output", None):
        Path(args.output).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)


def _write_chain(args, mappings: list[Mapping], label: str) -> None:
    texts = [render_mapping(m) for m in mappings]
    if args.json:
        print(dumps({label: texts}))
        return
    if getattr(args, "output", None):
        for i, text in enumerate(texts, 1):
            Path(f"{args.output}.{i}.map").write_text(text + "\n", encoding="utf-8")
        print(f"wrote {len(texts)} mappings to {args.output}.1.map .. {args.output}.{len(texts)}.map")
    else:
        for i, text in enumerate(texts, 1):
            print(f"# {label} {i}")
            print(text)


def _so_part(m: Mapping) -> StSODependency:
    """The second-order source-to-target part, Skolemizing plain tgds."""
    if m.stso is not None:
        return m.stso
    clauses, functions = skolemize(m.st_tgds)
    return StSODependency(functions=functions, clauses=tuple(clauses))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_validate(args) -> int:
    text = _read(args.mapping)
    try:
        parse_mapping(text, file=args.mapping)
    except ValidationError as e:
        if args.json:
            print(dumps({"ok": False, "diagnostics": [
                {"severity": d.severity, "message": d.message,
                 "line": d.span.line if d.span else None,
                 "column": d.span.column if d.span else None}
                for d in e.diagnostics]}))
        else:
            for d in e.diagnostics:
                where = f"{args.mapping}:{d.span.line}: " if d.span else ""
                _err(f"{where}{d.severity}: {d.message}")
        return EXIT_VALIDATION
    m = parse_mapping(text, file=args.mapping, validated=False)
    diags = validate(m)
    if args.json:
        print(dumps({"ok": True, "kind": m.kind(), "diagnostics": [
            {"severity": d.severity, "message": d.message,
             "line": d.span.line if d.span else None,
             "column": d.span.column if d.span else None}
            for d in diags]}))
    else:
        for d in diags:
            _warn(f"{d.severity}: {d.message}")
        print(f"ok: {m.kind()} mapping")
    return EXIT_OK


def _cmd_chase(args) -> int:
    m = _load_mapping(args.mapping)
    inst = parse_instance(_read(args.instance), schema=m.source, file=args.instance)
    result = chase_mapping(inst, m, trace=args.trace)
    if args.trace:
        for line in result.trace:
            print(_tinted(line, "36"), file=sys.stderr)
    if not result.ok:
        witness = result.witness
        detail = ""
        if witness:
            detail = f": constants {witness[0]} and {witness[1]} forced equal"
        if args.json:
            print(dumps({"ok": False, "witness": [str(w) for w in witness] if witness else None,
                         "stats": result.stats}))
        else:
            _err(f"chase failed{detail}")
        return EXIT_DOMAIN
    assert result.instance is not None
    payload = {"ok": True, "instance": instance_to_json(result.instance), "stats": result.stats}
    _emit(args, payload, render_instance(result.instance))
    return EXIT_OK


def _cmd_compose(args) -> int:
    mappings = [_load_mapping(p) for p in args.mappings]
    stats: dict = {}
    if args.emit_intermediate:
        head, tail = collapse_chain(mappings)
        if args.output:
            Path(f"{args.output}.head.map").write_text(render_mapping(head) + "\n", encoding="utf-8")
            Path(f"{args.output}.tail.map").write_text(render_mapping(tail) + "\n", encoding="utf-8")
        else:
            print("# collapsed head")
            print(render_mapping(head))
            print("# collapsed tail")
            print(render_mapping(tail))
    composed = compose_chain(mappings, stats=stats)
    payload = {"mapping": render_mapping(composed), "stats": stats}
    _emit(args, payload, render_mapping(composed))
    return EXIT_OK


def _cmd_collapse(args) -> int:
    mappings = [_load_mapping(p) for p in args.mappings]
    head, tail = collapse_chain(mappings)
    _write_chain(args, [head, tail], "mapping")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    m = _load_mapping(args.mapping)
    if m.stso is None:
        _err("decompose expects a mapping with a second-order part")
        return EXIT_VALIDATION
    chain = decompose_stso(m)
    _write_chain(args, chain, "stage")
    return EXIT_OK


def _cmd_denest(args) -> int:
    m = _load_mapping(args.mapping)
    if m.stso is None:
        _err("denest expects a mapping with a second-order part")
        return EXIT_VALIDATION
    stats: dict = {}
    if args.so_tgd_depth2:
        dep = denest_sotgd_depth2(m.stso, stats=stats)
    else:
        dep = denest_stso(m.stso, stats=stats)
    out = Mapping(
        source=m.source,
        target=m.target,
        stso=dep,
        source_egds=list(m.source_egds),
        target_egds=list(m.target_egds),
        target_tgds=list(m.target_tgds),
    )
    payload = {"mapping": render_mapping(out), "stats": stats}
    _emit(args, payload, render_mapping(out))
    return EXIT_OK


def _cmd_certain(args) -> int:
    m = _load_mapping(args.mapping)
    q = parse_query(_read(args.query), file=args.query)
    inst = parse_instance(_read(args.instance), schema=m.source, file=args.instance, ground=True)
    result = certain_answers(m, q, inst)
    if args.json:
        print(dumps({
            "top": result.top,
            "tuples": sorted(
                [[str(v) for v in t] for t in result.tuples]
            ),
        }))
    elif result.top:
        print("top")
    else:
        for t in sorted(result.tuples, key=lambda t: tuple(str(v) for v in t)):
            print(", ".join(str(v) for v in t))
    return EXIT_OK


def _cmd_check_equiv(args) -> int:
    m1 = _load_mapping(args.mappings[0])
    m2 = _load_mapping(args.mappings[1])
    verdict, cex = check_equiv(
        _so_part(m1), _so_part(m2), gen=args.seed, trials=args.trials, budget=_budget(args)
    )
    if args.json:
        payload = {"verdict": str(verdict)}
        if cex:
            payload["counterexample"] = {
                "source": instance_to_json(cex[0]),
                "target": instance_to_json(cex[1]),
            }
        print(dumps(payload))
    else:
        print(str(verdict))
        if cex:
            if args.output:
                Path(f"{args.output}.source.inst").write_text(render_instance(cex[0]) + "\n", encoding="utf-8")
                Path(f"{args.output}.target.inst").write_text(render_instance(cex[1]) + "\n", encoding="utf-8")
            else:
                print("# counterexample source")
                print(render_instance(cex[0]))
                print("# counterexample target")
                print(render_instance(cex[1]))
    if verdict.is_unknown:
        return EXIT_BUDGET
    return EXIT_OK if verdict.is_true else EXIT_DOMAIN


def _cmd_check_member(args) -> int:
    mappings = [_load_mapping(p) for p in args.mappings]
    first = parse_instance(_read(args.instance), schema=mappings[0].source,
                           file=args.instance, ground=True)
    last = parse_instance(_read(args.final), schema=mappings[-1].target, file=args.final)
    verdict = chain_member(first, last, mappings, _budget(args))
    if args.json:
        print(dumps({"verdict": str(verdict)}))
    else:
        print(str(verdict))
    if verdict.is_unknown:
        return EXIT_BUDGET
    return EXIT_OK if verdict.is_true else EXIT_DOMAIN


def _cmd_check_solutions(args) -> int:
    m = _load_mapping(args.mapping)
    inst = parse_instance(_read(args.instance), schema=m.source, file=args.instance, ground=True)
    sols = enumerate_solutions(
        inst, m, _budget(args), minimal_only=args.minimal, limit=args.limit
    )
    if args.json:
        print(dumps({"count": len(sols), "solutions": [instance_to_json(J) for J in sols]}))
    else:
        for i, J in enumerate(sols, 1):
            print(f"# solution {i}")
            print(render_instance(J))
        if not sols:
            print("no solutions")
    return EXIT_OK if sols else EXIT_DOMAIN


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapforge",
        description="Schema-mapping toolkit: validate, chase, compose, "
        "decompose, denest, and check data-exchange dependencies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="structured output")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--budget-nulls", type=int, default=None,
                        help="fresh values available to searches")
    common.add_argument("--budget-ms", type=int, default=None,
                        help="time budget per search in milliseconds")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker processes for check trials (reserved)")

    p = sub.add_parser("validate", parents=[common], help="parse and validate a mapping")
    p.add_argument("mapping")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("chase", parents=[common], help="chase an instance through a mapping")
    p.add_argument("-m", "--mapping", required=True)
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--trace", action="store_true", help="log chase steps to stderr")
    p.set_defaults(fn=_cmd_chase)

    p = sub.add_parser("compose", parents=[common],
                       help="compose a chain of mappings into one second-order mapping")
    p.add_argument("mappings", nargs="+")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--emit-intermediate", action="store_true",
                   help="also emit the collapsed two-mapping chain")
    p.set_defaults(fn=_cmd_compose)

    p = sub.add_parser("collapse", parents=[common],
                       help="collapse a chain to an equivalent two-mapping chain")
    p.add_argument("mappings", nargs="+")
    p.add_argument("-o", "--output", default=None, help="prefix for .1.map/.2.map files")
    p.set_defaults(fn=_cmd_collapse)

    p = sub.add_parser("decompose", parents=[common],
                       help="split a second-order mapping into standard stages")
    p.add_argument("mapping")
    p.add_argument("-o", "--output", default=None, help="prefix for .<i>.map files")
    p.set_defaults(fn=_cmd_decompose)

    p = sub.add_parser("denest", parents=[common],
                       help="rewrite the second-order part to nesting depth one")
    p.add_argument("mapping")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--so-tgd-depth2", action="store_true",
                   help="use the congruence-free depth-2 construction")
    p.set_defaults(fn=_cmd_denest)

    p = sub.add_parser("certain", parents=[common],
                       help="certain answers of a query via the chase")
    p.add_argument("-m", "--mapping", required=True)
    p.add_argument("-q", "--query", required=True)
    p.add_argument("-i", "--instance", required=True)
    p.set_defaults(fn=_cmd_certain)

    check = sub.add_parser("check", help="brute-force reference checks")
    check_sub = check.add_subparsers(dest="check_command", required=True)

    p = check_sub.add_parser("equiv", parents=[common],
                             help="randomized equivalence of two mappings")
    p.add_argument("mappings", nargs=2)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("-o", "--output", default=None,
                   help="prefix for counterexample .inst files")
    p.set_defaults(fn=_cmd_check_equiv)

    p = check_sub.add_parser("member", parents=[common],
                             help="membership of an instance pair in a composition")
    p.add_argument("mappings", nargs="+")
    p.add_argument("-i", "--instance", required=True, help="first instance (ground)")
    p.add_argument("-j", "--final", required=True, help="last instance")
    p.set_defaults(fn=_cmd_check_member)

    p = check_sub.add_parser("solutions", parents=[common],
                             help="enumerate solutions over a bounded universe")
    p.add_argument("-m", "--mapping", required=True)
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("--minimal", action="store_true", help="minimal solutions only")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(fn=_cmd_check_solutions)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ParseError as e:
        where = f"{e.span.file}:{e.span.line}:{e.span.column}: " if e.span else ""
        _err(f"{where}parse error: {e.message}")
        return EXIT_PARSE
    except ValidationError as e:
        for d in e.diagnostics:
            _err(f"{d.severity}: {d.message}")
        return EXIT_VALIDATION
    except NotWeaklyAcyclic as e:
        _err(f"not weakly acyclic: {e}")
        return EXIT_VALIDATION
    except (ComposeError, DepthExceeded) as e:
        _err(str(e))
        return EXIT_VALIDATION
    except BudgetExceeded as e:
        _err(f"budget exhausted: {e}")
        return EXIT_BUDGET
    except OSError as e:
        _err(str(e))
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
