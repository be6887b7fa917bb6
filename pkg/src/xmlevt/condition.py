"""Boolean conditions over relative paths, evaluated against a document subtree.

Grammar (both the symbolic and the ASCII spellings are accepted)::

    cond    := conj (("∨" | "or") conj)*
    conj    := unary (("∧" | "and") unary)*
    unary   := ("¬" | "not") unary | "(" cond ")" | test
    test    := path [cmp literal]
    cmp     := "=" | "≠" | "!=" | "<" | "≤" | "<=" | ">" | "≥" | ">="
    literal := number | "..." | '...'
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Union

from .paths import PathSyntaxError, PathType, parse_path_type


class ConditionSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.pos = pos


@dataclass(frozen=True)
class Exists:
    path: PathType


@dataclass(frozen=True)
class Compare:
    path: PathType
    op: str
    literal: Union[float, str]


@dataclass(frozen=True)
class Not:
    operand: "Condition"


@dataclass(frozen=True)
class And:
    operands: tuple["Condition", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Condition", ...]


Condition = Union[Exists, Compare, Not, And, Or]

COMPARATORS: dict[str, Callable] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">=", "∧": "and", "∨": "or", "¬": "not",
            "&&": "and", "||": "or", "!": "not"}

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<num>-?\d+(?:\.\d+)?)(?![\w/])
      | (?P<str>"[^"]*"|'[^']*')
      | (?P<cmp>!=|<=|>=|=|<|>|≠|≤|≥)
      | (?P<sym>&&|\|\||[∧∨¬!()])
      | (?P<word>[@\w.:\-/]+(?:\(\))?(?:/[@\w.:\-]+(?:\(\))?)*)
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ConditionSyntaxError("unexpected character", text, pos)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "word" and value.lower() in ("and", "or", "not"):
            kind, value = "sym", value.lower()
        elif kind in ("sym", "cmp"):
            value = _ALIASES.get(value, value)
        tokens.append((kind, value, start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, message: str):
        raise ConditionSyntaxError(message, self.text, self.peek()[2])

    def parse(self) -> Condition:
        if not self.tokens:
            self.fail("empty condition")
        cond = self.disjunction()
        if self.peek()[0] is not None:
            self.fail(f"unexpected {self.peek()[1]!r}")
        return cond

    def disjunction(self) -> Condition:
        parts = [self.conjunction()]
        while self.peek()[:2] == ("sym", "or"):
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Condition:
        parts = [self.unary()]
        while self.peek()[:2] == ("sym", "and"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Condition:
        kind, value, pos = self.peek()
        if (kind, value) == ("sym", "not"):
            self.take()
            return Not(self.unary())
        if (kind, value) == ("sym", "("):
            self.take()
            inner = self.disjunction()
            if self.peek()[:2] != ("sym", ")"):
                self.fail("expected ')'")
            self.take()
            return inner
        if kind != "word":
            self.fail("expected a path")
        self.take()
        try:
            path = parse_path_type(value)
        except PathSyntaxError as exc:
            raise ConditionSyntaxError(str(exc), self.text, pos) from None
        if path.absolute:
            raise ConditionSyntaxError("condition paths must be relative", self.text, pos)
        if self.peek()[0] != "cmp":
            return Exists(path)
        op = self.take()[1]
        kind, value, _ = self.take()
        if kind == "num":
            return Compare(path, op, float(value))
        if kind == "str":
            return Compare(path, op, value[1:-1])
        self.i -= 1
        self.fail("expected a literal")


def parse_condition(text: str) -> Condition:
    return _Parser(text).parse()


def _as_number(value: str):
    try:
        return float(value.strip())
    except ValueError:
        return None


def holds(cond: Condition, values: Callable[[PathType], list[str]]) -> bool:
    """Evaluate ``cond`` given a resolver from path to the string values it addresses.

    Comparisons are existential over the addressed nodes, as in XPath, and
    false when nothing is addressed or a numeric comparison meets a
    non-numeric value.
    """
    if isinstance(cond, Exists):
        return bool(values(cond.path))
    if isinstance(cond, Compare):
        cmp = COMPARATORS[cond.op]
        for v in values(cond.path):
            if isinstance(cond.literal, float):
                num = _as_number(v)
                if num is not None and cmp(num, cond.literal):
                    return True
            elif cmp(v, cond.literal):
                return True
        return False
    if isinstance(cond, Not):
        return not holds(cond.operand, values)
    if isinstance(cond, And):
        return all(holds(c, values) for c in cond.operands)
    if isinstance(cond, Or):
        return any(holds(c, values) for c in cond.operands)
    raise TypeError(f"not a condition: {cond!r}")
