"""Command line front-end: ``xml-evt replay`` and ``xml-evt order``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, TextIO

from .clocks import ClockError, TraceSyntaxError, replay_trace
from .document import Document, DocumentError
from .engine import Context, EventGraph, GraphClosedError, GraphError, TreeValidationError
from .events import CompositeEvent, PrimitiveEvent
from .expr import ExprSyntaxError, parse_expressions
from .script import Close, Flush, Root, ScriptSyntaxError, parse_script

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SEMANTIC = 3


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _event_json(e) -> dict:
    if isinstance(e, PrimitiveEvent):
        return {"kind": "prim", "id": e.id, "op": e.et.op.value, "pt": str(e.et.pt),
                "pi": str(e.pi), "t": e.ts}
    return {"kind": "raise", "id": e.id, "type": e.et.name, "pt": str(e.et.pt), "pi": str(e.pi),
            "cevts": [c.id for c in e.cevts], "t": e.ts}


class Replay:
    """Runs a mutation script against the trees of an expression file."""

    def __init__(self, graph: EventGraph, out: TextIO, *, quiet: bool = False,
                 as_json: bool = False, inner: bool = False):
        self.graph = graph
        self.out = out
        self.quiet = quiet
        self.as_json = as_json
        self.inner = inner
        self.doc: Optional[Document] = None

    def emit(self, e) -> None:
        if isinstance(e, PrimitiveEvent) and self.quiet:
            return
        self.out.write((json.dumps(_event_json(e)) if self.as_json else str(e)) + "\n")

    def raised(self, composites: list[CompositeEvent]) -> None:
        for c in composites:
            if self.inner or self.graph.is_root_raise(c):
                self.emit(c)

    def run(self, steps, source: str) -> None:
        for step in steps:
            where = f"{source}:{step.line}"
            cmd = step.command
            try:
                if isinstance(cmd, Root):
                    if self.doc is not None:
                        raise DocumentError("the document already has a root")
                    self.doc = Document(cmd.name, cmd.id)
                    self.raised(self.graph.open(self.doc))
                    continue
                if self.doc is None:
                    raise DocumentError("no document yet; start the script with 'root <name> <id>'")
                if isinstance(cmd, Flush):
                    self.raised(self.graph.flush())
                elif isinstance(cmd, Close):
                    self.raised(self.graph.close())
                else:
                    if self.graph.closed:
                        raise GraphClosedError("event graph is closed")
                    target = self.doc.path_instance_of(step.chain[-1]) if step.chain[-1] in self.doc else None
                    if target is None or target.ids != step.chain:
                        raise DocumentError(f"no node at /{'/'.join(step.chain)}")
                    e = self.doc.apply(cmd)
                    self.emit(e)
                    self.raised(self.graph.process(e))
            except (DocumentError, GraphClosedError) as exc:
                raise _Failure(EXIT_SEMANTIC, f"{where}: {exc}") from None


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _Failure(EXIT_PARSE, f"{path}: {exc.strerror}") from None


def run_replay(expr_path: str, script_path: str, out: TextIO, *, quiet: bool = False,
               as_json: bool = False, inner: bool = False, context: Optional[str] = None,
               hierarchical: Optional[bool] = None) -> int:
    try:
        defs = parse_expressions(_read(expr_path), expr_path, context=context, hierarchical=hierarchical)
    except ExprSyntaxError as exc:
        raise _Failure(EXIT_PARSE, str(exc)) from None
    graph = EventGraph()
    for d in defs:
        try:
            graph.add(d.tree)
        except (TreeValidationError, GraphError) as exc:
            raise _Failure(EXIT_SEMANTIC, f"{expr_path}: {d.name}: {exc}") from None
    try:
        steps = parse_script(_read(script_path), script_path)
    except ScriptSyntaxError as exc:
        raise _Failure(EXIT_PARSE, str(exc)) from None
    Replay(graph, out, quiet=quiet, as_json=as_json, inner=inner).run(steps, script_path)
    return EXIT_OK


def run_order(trace_path: str, out: TextIO) -> int:
    try:
        lines = replay_trace(_read(trace_path), trace_path)
    except TraceSyntaxError as exc:
        raise _Failure(EXIT_PARSE, str(exc)) from None
    except ClockError as exc:
        raise _Failure(EXIT_SEMANTIC, f"{trace_path}: {exc}") from None
    for line in lines:
        out.write(line + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xml-evt", description="Composite XML mutation events.")
    sub = parser.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("replay", help="replay a mutation script against event type definitions")
    rp.add_argument("expr", help="expression file with 'def' statements")
    rp.add_argument("script", help="mutation script")
    rp.add_argument("--quiet", action="store_true", help="omit primitive event lines")
    rp.add_argument("--json", action="store_true", help="one JSON object per line")
    rp.add_argument("--inner", action="store_true", help="also print raises of inner operator nodes")
    rp.add_argument("--context", choices=[c.value for c in Context],
                    help="default context for operators without one")
    rp.add_argument("--hier", choices=["on", "off"], help="default hierarchical setting")

    op = sub.add_parser("order", help="answer order queries over a distributed event trace")
    op.add_argument("trace", help="trace file")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            hier = None if args.hier is None else args.hier == "on"
            return run_replay(args.expr, args.script, sys.stdout, quiet=args.quiet,
                              as_json=args.json, inner=args.inner, context=args.context,
                              hierarchical=hier)
        return run_order(args.trace, sys.stdout)
    except _Failure as exc:
        sys.stdout.flush()
        print(f"xml-evt: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
