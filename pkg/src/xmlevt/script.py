"""Line-oriented mutation scripts.

::

    root order o1
    ins /o1 item i1
    attr /o1/i1 partnum a1 "926-AA"
    text /o1/i1/p1 t1 "12"
    upd /o1/i1/a1 "927-AA"
    del /o1/i1
    flush
    close
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from typing import Union

from .document import Delete, InsertAttribute, InsertElement, InsertText, Update


class ScriptSyntaxError(ValueError):
    def __init__(self, message: str, line: int, source: str = "<script>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line
        self.source = source


@dataclass(frozen=True)
class Root:
    name: str
    id: str


@dataclass(frozen=True)
class Flush:
    pass


@dataclass(frozen=True)
class Close:
    pass


@dataclass(frozen=True)
class Step:
    """A script command together with the instance chains it names."""

    line: int
    command: Union[Root, Flush, Close, InsertElement, InsertAttribute, InsertText, Update, Delete]
    chain: tuple[str, ...] = ()  # ids of the addressed instance, root first


_ARITY = {"root": 2, "ins": 3, "attr": 4, "text": 3, "upd": 2, "del": 1, "flush": 0, "close": 0}


def _chain(text: str, line: int, source: str) -> tuple[str, ...]:
    if not text.startswith("/") or text == "/" or "//" in text:
        raise ScriptSyntaxError(f"malformed instance {text!r}", line, source)
    return tuple(text.strip("/").split("/"))


def parse_script(text: str, source: str = "<script>") -> list[Step]:
    steps = []
    for n, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            parts = shlex.split(stripped, comments=True)
        except ValueError as exc:
            raise ScriptSyntaxError(str(exc), n, source) from None
        cmd, args = parts[0], parts[1:]
        if cmd not in _ARITY:
            raise ScriptSyntaxError(f"unknown command {cmd!r}", n, source)
        if len(args) != _ARITY[cmd]:
            raise ScriptSyntaxError(f"{cmd} takes {_ARITY[cmd]} arguments, got {len(args)}", n, source)
        if cmd == "root":
            steps.append(Step(n, Root(args[0], args[1])))
        elif cmd == "flush":
            steps.append(Step(n, Flush()))
        elif cmd == "close":
            steps.append(Step(n, Close()))
        else:
            chain = _chain(args[0], n, source)
            if cmd == "ins":
                command = InsertElement(chain[-1], args[1], args[2])
            elif cmd == "attr":
                command = InsertAttribute(chain[-1], args[1], args[2], args[3])
            elif cmd == "text":
                command = InsertText(chain[-1], args[1], args[2])
            elif cmd == "upd":
                command = Update(chain[-1], args[1])
            else:
                command = Delete(chain[-1])
            steps.append(Step(n, command, chain))
    return steps
