"""Parser for expression files defining composite event types.

Example::

    # an order item is complete once price and quantity are known
    def InsertItem(item) { context=chronicle, hier=off } :=
        ins(item) seq (ins(item/price) and ins(item/quantity)) ;

Binding from loosest to tightest is ``or``, ``and``, ``seq`` (left
associative), then the prefix ``mult[l,u]``. Chains of ``and``/``or`` become one
n-ary node; parentheses start a new node. An option block ``{...}`` following a
parenthesised operator expression, or a ``mult`` operand, configures that
operator. Leaves are ``ins|upd|del|*(pt)`` for primitive types and
``Name(pt)`` or ``ref *(pt)`` for composite types.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .condition import ConditionSyntaxError, parse_condition
from .engine import Context, EventTree, EventTypeNode, Mode, OperatorNode, Opr
from .events import STAR, CompositeEventType, Operation, PrimitiveEventType
from .paths import PathSyntaxError, parse_path_type


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int, source: str = "<expr>"):
        super().__init__(f"{source}:{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.source = source


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<assign>:=)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<punct>[(){}\[\],;=*])
  | (?P<num>\d+)
  | (?P<word>[A-Za-z_][\w.\-]*)
""", re.VERBOSE)

_PATH_RE = re.compile(r"[^(),;{}\s]+(?:\(\))?(?:/[^(),;{}\s]+(?:\(\))?)*")

_KEYWORDS = {"def", "and", "or", "seq", "mult", "ref", "inf"}
_OPTION_KEYS = {"context", "hier", "mode", "cond", "pt", "name"}


@dataclass
class _Tok:
    kind: str
    value: str
    pos: int


@dataclass
class Definition:
    """One parsed ``def``: tree name, optional declared path type, operator defaults."""

    name: str
    tree: EventTree
    options: dict = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str, source: str, defaults: dict):
        self.text = text
        self.source = source
        self.pos = 0
        self.base_defaults = defaults

    # lexing ---------------------------------------------------------------

    def _skip(self) -> None:
        while True:
            m = _TOKEN_RE.match(self.text, self.pos)
            if m and m.lastgroup == "ws":
                self.pos = m.end()
            else:
                return

    def peek(self) -> Optional[_Tok]:
        self._skip()
        if self.pos >= len(self.text):
            return None
        m = _TOKEN_RE.match(self.text, self.pos)
        if not m:
            self.fail(f"unexpected character {self.text[self.pos]!r}")
        return _Tok(m.lastgroup, m.group(m.lastgroup), m.start())

    def take(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of input")
        self.pos = tok.pos + len(tok.value)
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.value == value and tok.kind != "str"

    def expect(self, value: str) -> _Tok:
        if not self.at(value):
            tok = self.peek()
            self.fail(f"expected {value!r}, found {tok.value if tok else 'end of input'!r}")
        return self.take()

    def location(self, pos: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, message: str, pos: Optional[int] = None):
        if pos is None:
            self._skip()
            pos = self.pos
        line, col = self.location(pos)
        raise ExprSyntaxError(message, line, col, self.source)

    def path(self):
        self._skip()
        m = _PATH_RE.match(self.text, self.pos)
        if not m:
            self.fail("expected a path type")
        try:
            pt = parse_path_type(m.group())
        except PathSyntaxError as exc:
            self.fail(str(exc), m.start() + exc.pos)
        self.pos = m.end()
        return pt

    # grammar --------------------------------------------------------------

    def definitions(self) -> list[Definition]:
        out = []
        while self.peek() is not None:
            out.append(self.definition())
        return out

    def definition(self) -> Definition:
        self.expect("def")
        tok = self.take()
        if tok.kind != "word" or tok.value in _KEYWORDS:
            self.fail("expected an event type name", tok.pos)
        name = tok.value
        declared = None
        if self.at("("):
            self.take()
            declared = self.path()
            self.expect(")")
        opt_pos = self.peek().pos if self.at("{") else None
        options = self.options() if opt_pos is not None else {}
        if "name" in options:
            self.fail("a definition is named by its header, not a name option", opt_pos)
        self.expect(":=")
        self.defaults = dict(self.base_defaults)
        self.defaults.update({k: v for k, v in options.items() if k in ("context", "hier", "mode")})
        root_pos = self.peek().pos if self.peek() is not None else None
        root = self.disjunction()
        self.expect(";")
        if not isinstance(root, OperatorNode):
            self.fail(f"definition {name} needs an operator at its root", root_pos)
        for k in ("cond", "pt"):
            if k in options:
                self._apply(root, {k: options[k]})
        pt = options.get("pt", declared)
        return Definition(name, EventTree(name, root, pt), options)

    def options(self) -> dict:
        start = self.expect("{").pos
        opts: dict = {}
        while not self.at("}"):
            key_tok = self.take()
            key = key_tok.value
            if key not in _OPTION_KEYS:
                self.fail(f"unknown option {key!r}", key_tok.pos)
            self.expect("=")
            if key == "pt":
                opts[key] = self.path()
            elif key == "cond":
                tok = self.take()
                if tok.kind != "str":
                    self.fail("cond needs a quoted condition", tok.pos)
                try:
                    opts[key] = parse_condition(tok.value[1:-1].replace('\\"', '"'))
                except (ConditionSyntaxError, PathSyntaxError) as exc:
                    self.fail(str(exc), tok.pos)
            else:
                tok = self.take()
                opts[key] = self._option_value(key, tok)
            if not self.at("}"):
                self.expect(",")
        self.take()
        if not opts:
            self.fail("empty option block", start)
        return opts

    def _option_value(self, key: str, tok: _Tok):
        try:
            if key == "context":
                return Context(tok.value)
            if key == "mode":
                return Mode(tok.value)
            if key == "hier":
                return {"on": True, "off": False, "true": True, "false": False}[tok.value]
        except (ValueError, KeyError):
            self.fail(f"invalid value {tok.value!r} for {key}", tok.pos)
        if tok.kind != "word":
            self.fail(f"invalid value {tok.value!r} for {key}", tok.pos)
        return tok.value

    def _new(self, opr: Opr, children, **kw) -> OperatorNode:
        node = OperatorNode(opr, children, context=self.defaults["context"],
                            hierarchical=self.defaults["hier"], mode=self.defaults["mode"], **kw)
        return node

    @staticmethod
    def _apply(node: OperatorNode, opts: dict) -> None:
        for key, value in opts.items():
            if key == "context":
                node.context = value
            elif key == "hier":
                node.hierarchical = value
            elif key == "mode":
                node.mode = value
            elif key == "cond":
                node.cond = value
            elif key == "pt":
                node.explicit_pt = value
            elif key == "name":
                node.name = value

    def _chain(self, word: str, opr: Opr, sub):
        parts = [sub()]
        while self.at(word):
            self.take()
            parts.append(sub())
        return parts[0] if len(parts) == 1 else self._new(opr, parts)

    def disjunction(self):
        return self._chain("or", Opr.DISJ, self.conjunction)

    def conjunction(self):
        return self._chain("and", Opr.CONJ, self.sequence)

    def sequence(self):
        node = self.unary()
        while self.at("seq"):
            self.take()
            node = self._new(Opr.SEQ, [node, self.unary()])
        return node

    def unary(self):
        if self.at("mult"):
            self.take()
            self.expect("[")
            lower = self._int()
            self.expect(",")
            if self.at("inf"):
                self.take()
                upper = math.inf
            else:
                upper = self._int()
            self.expect("]")
            operand = self.unary()
            node = self._new(Opr.MULT, [operand], lower=lower, upper=upper)
            if self.at("{"):
                self._apply(node, self.options())
            return node
        return self.primary()

    def _int(self) -> int:
        tok = self.take()
        if tok.kind != "num":
            self.fail("expected an integer bound", tok.pos)
        return int(tok.value)

    def primary(self):
        if self.at("("):
            self.take()
            inner = self.disjunction()
            self.expect(")")
            if self.at("{"):
                pos = self.peek().pos
                opts = self.options()
                if not isinstance(inner, OperatorNode):
                    self.fail("options need an operator expression", pos)
                self._apply(inner, opts)
            return inner
        tok = self.take()
        if tok.value == "ref":
            tok = self.take()
            if tok.value != "*" and (tok.kind != "word" or tok.value in _KEYWORDS):
                self.fail("expected an event type name after ref", tok.pos)
            return self._leaf_composite(tok.value)
        if tok.value in ("ins", "upd", "del", "*"):
            self.expect("(")
            pt = self.path()
            self.expect(")")
            return EventTypeNode(PrimitiveEventType(Operation(tok.value), pt))
        if tok.kind == "word" and tok.value not in _KEYWORDS:
            return self._leaf_composite(tok.value)
        self.fail(f"unexpected {tok.value!r}", tok.pos)

    def _leaf_composite(self, name: str) -> EventTypeNode:
        self.expect("(")
        pt = self.path()
        self.expect(")")
        return EventTypeNode(CompositeEventType(STAR if name == "*" else name, pt))


DEFAULTS = {"context": Context.CHRONICLE, "hier": True, "mode": Mode.EARLIEST}


def parse_expressions(text: str, source: str = "<expr>", *, context: Optional[Context] = None,
                      hierarchical: Optional[bool] = None) -> list[Definition]:
    """Parse every ``def`` in ``text``.

    ``context`` and ``hierarchical`` replace the built-in defaults; options in
    the file still take precedence.
    """
    defaults = dict(DEFAULTS)
    if context is not None:
        defaults["context"] = Context(context)
    if hierarchical is not None:
        defaults["hier"] = hierarchical
    return _Parser(text, source, defaults).definitions()


def parse_expression(text: str, **kw) -> EventTree:
    """Parse a single definition and return its (not yet validated) tree."""
    defs = parse_expressions(text, **kw)
    if len(defs) != 1:
        raise ValueError(f"expected exactly one definition, found {len(defs)}")
    return defs[0].tree
