"""Path types and path instances over XML trees, and the operators on them.

``None`` plays the role of the null path type / null path instance: every
operator accepts it and returns it in-band instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence


class Axis(str, Enum):
    CHILD = "child"
    ATTRIBUTE = "attribute"


class Kind(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


TEXT = "text()"


class PathSyntaxError(ValueError):
    """Malformed path-type text; ``pos`` is the 0-based offset of the problem."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.text = text
        self.pos = pos


@dataclass(frozen=True, slots=True)
class Step:
    axis: Axis
    test: str  # a QName, or TEXT

    def __post_init__(self):
        if self.axis is Axis.ATTRIBUTE and self.test == TEXT:
            raise ValueError("attribute axis cannot carry a text() test")

    @property
    def is_text(self) -> bool:
        return self.test == TEXT

    def __str__(self) -> str:
        return f"@{self.test}" if self.axis is Axis.ATTRIBUTE else self.test


def element(name: str) -> Step:
    return Step(Axis.CHILD, name)


def attribute(name: str) -> Step:
    return Step(Axis.ATTRIBUTE, name)


def text() -> Step:
    return Step(Axis.CHILD, TEXT)


@dataclass(frozen=True, slots=True)
class PathType:
    kind: Kind
    steps: tuple[Step, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a path type needs at least one step")
        for step in self.steps[:-1]:
            if step.is_text or step.axis is Axis.ATTRIBUTE:
                raise ValueError(f"step {step} must be the last step")

    @property
    def absolute(self) -> bool:
        return self.kind is Kind.ABSOLUTE

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        body = "/".join(str(s) for s in self.steps)
        return "/" + body if self.absolute else body


@dataclass(frozen=True, slots=True)
class PathInstance:
    """Node identifiers along a path type, one per step.

    Instances taken from a document are absolute. Projections onto a relative
    path type (``pi_project``) keep that relative type.
    """

    pt: PathType
    ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.pt.steps):
            raise ValueError(
                f"{len(self.ids)} ids do not match {len(self.pt.steps)} steps of {self.pt}"
            )

    @property
    def node(self) -> str:
        return self.ids[-1]

    def __str__(self) -> str:
        body = "/".join(self.ids)
        return "/" + body if self.pt.absolute else body


OptPT = Optional[PathType]
OptPI = Optional[PathInstance]


def pt_equal(pt1: OptPT, pt2: OptPT) -> bool:
    if pt1 is None or pt2 is None:
        return pt1 is None and pt2 is None
    return pt1.kind is pt2.kind and pt1.steps == pt2.steps


def _offsets(inner: Sequence[Step], outer: Sequence[Step]) -> list[int]:
    m = len(inner)
    return [c for c in range(len(outer) - m + 1) if tuple(outer[c:c + m]) == tuple(inner)]


def _containment_offset(pt1: OptPT, pt2: OptPT) -> Optional[int]:
    """Offset of the unique occurrence of pt1 inside pt2, or None."""
    if pt1 is None or pt2 is None:
        return None
    m, n = len(pt1), len(pt2)
    if pt1.absolute and not pt2.absolute:
        return None
    if pt1.absolute:
        # an absolute path can only be anchored at the root
        return 0 if m < n and pt2.steps[:m] == pt1.steps else None
    if not pt2.absolute and not m < n:
        return None
    found = _offsets(pt1.steps, pt2.steps)
    return found[0] if len(found) == 1 else None


def pt_contains(pt1: OptPT, pt2: OptPT) -> bool:
    """True iff pt2 uniquely contains pt1 (written pt1 ⊂ pt2)."""
    return _containment_offset(pt1, pt2) is not None


def pt_ends(pt1: OptPT, pt2: OptPT) -> bool:
    """True iff relative pt1 ends pt2 and pt2 is more special."""
    if pt1 is None or pt2 is None or pt1.absolute:
        return False
    m, n = len(pt1), len(pt2)
    if not (m < n or (pt2.absolute and m == n)):
        return False
    return pt2.steps[n - m:] == pt1.steps


def pt_intersect_lb(pt1: OptPT, pt2: OptPT) -> OptPT:
    """Left-bound intersection: the common leading steps (commutative)."""
    if pt1 is None or pt2 is None or pt1.steps[0] != pt2.steps[0]:
        return None
    common = []
    for a, b in zip(pt1.steps, pt2.steps):
        if a != b:
            break
        common.append(a)
    kind = pt1.kind if pt1.kind is pt2.kind else Kind.ABSOLUTE
    return PathType(kind, tuple(common))


def pt_intersect_ab(pt1: OptPT, pt2: OptPT) -> OptPT:
    """Make pt1 absolute by cutting absolute pt2 after the occurrence of pt1."""
    if pt1 is None or pt2 is None:
        return None
    if not pt2.absolute:
        raise ValueError(f"right operand {pt2} must be absolute")
    if pt_equal(pt1, pt2):
        return pt2
    c = _containment_offset(pt1, pt2)
    if c is None:
        return None
    return PathType(Kind.ABSOLUTE, pt2.steps[:c + len(pt1)])


def pi_equal(pi1: OptPI, pi2: OptPI) -> bool:
    if pi1 is None or pi2 is None:
        return pi1 is None and pi2 is None
    return pt_equal(pi1.pt, pi2.pt) and pi1.ids == pi2.ids


def pi_project(pt: OptPT, pi: OptPI) -> OptPI:
    """Projection of ``pi`` onto ``pt``; None unless pt ⊂ pi.pt or pt = pi.pt."""
    if pt is None or pi is None:
        return None
    if pt_equal(pt, pi.pt):
        return pi
    c = _containment_offset(pt, pi.pt)
    if c is None:
        return None
    return PathInstance(pt, pi.ids[c:c + len(pt)])


_NAME = r"[A-Za-z_][\w.\-]*(?::[A-Za-z_][\w.\-]*)?"
_STEP_RE = re.compile(rf"(?P<text>text\(\))|(?P<attr>@{_NAME})|(?P<elem>{_NAME})")


def parse_path_type(text_: str) -> PathType:
    """Parse ``/order/item/@partnum``, ``item/price``, ``price/text()`` and the like."""
    s = text_.strip()
    offset = len(text_) - len(text_.lstrip())
    if not s:
        raise PathSyntaxError("empty path type", text_, offset)
    kind = Kind.RELATIVE
    pos = 0
    if s.startswith("/"):
        kind = Kind.ABSOLUTE
        pos = 1
    steps: list[Step] = []
    while True:
        m = _STEP_RE.match(s, pos)
        if not m:
            what = "empty step" if pos >= len(s) or s[pos] == "/" else "invalid step"
            if pos < len(s) and s[pos] == "*":
                what = "wildcards are not supported"
            raise PathSyntaxError(what, text_, offset + pos)
        if m.group("text"):
            step = text()
        elif m.group("attr"):
            step = attribute(m.group("attr")[1:])
        else:
            step = element(m.group("elem"))
        if steps and (steps[-1].is_text or steps[-1].axis is Axis.ATTRIBUTE):
            raise PathSyntaxError(f"no step may follow {steps[-1]}", text_, offset + pos)
        steps.append(step)
        pos = m.end()
        if pos == len(s):
            break
        if s[pos] != "/":
            raise PathSyntaxError(f"unexpected {s[pos]!r}", text_, offset + pos)
        pos += 1
    return PathType(kind, tuple(steps))


def parse_path_instance(text_: str, pt: PathType) -> PathInstance:
    ids = tuple(x for x in text_.strip().strip("/").split("/"))
    return PathInstance(pt, ids)
