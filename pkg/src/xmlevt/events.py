"""Primitive and composite mutation events, their types, and occurrence intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

from .paths import PathInstance, PathType, pt_ends, pt_equal

STAR = "*"


class Operation(str, Enum):
    INS = "ins"
    UPD = "upd"
    DEL = "del"
    STAR = "*"


@dataclass(frozen=True, slots=True)
class PrimitiveEventType:
    op: Operation
    pt: PathType

    def __str__(self) -> str:
        return f"{self.op.value}({self.pt})"


@dataclass(frozen=True, slots=True)
class CompositeEventType:
    name: str  # STAR for the wildcard
    pt: PathType

    def __str__(self) -> str:
        return f"{self.name}({self.pt})"


EventType = Union[PrimitiveEventType, CompositeEventType]


@dataclass(frozen=True, slots=True)
class Interval:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"interval start {self.start} after end {self.end}")

    def __str__(self) -> str:
        return f"[{self.start},{self.end}]"


@dataclass(frozen=True, slots=True)
class PrimitiveEvent:
    id: int
    ts: int
    et: PrimitiveEventType
    pi: PathInstance

    def __post_init__(self):
        if self.et.op is Operation.STAR:
            raise ValueError("a concrete event cannot have the * operation")
        if not self.et.pt.absolute or not pt_equal(self.pi.pt, self.et.pt):
            raise ValueError(f"path instance {self.pi} does not match {self.et}")

    @property
    def interval(self) -> Interval:
        return Interval(self.ts, self.ts)

    def __str__(self) -> str:
        return f"prim {self.et} at {self.pi} id={self.id} t={self.ts}"


@dataclass(frozen=True, eq=False)
class CompositeEvent:
    """A raised composite; ``ts`` is the tick it was raised at.

    Compared by identity: two raises with equal constituents are still
    distinct events.
    """

    id: int
    et: CompositeEventType
    pi: PathInstance
    cevts: tuple[Event, ...]
    ts: int
    interval: Interval = field(init=False)

    def __post_init__(self):
        if self.et.name == STAR:
            raise ValueError("a concrete event cannot have the * name")
        if not self.et.pt.absolute or not pt_equal(self.pi.pt, self.et.pt):
            raise ValueError(f"path instance {self.pi} does not match {self.et}")
        if len({e.id for e in self.cevts}) != len(self.cevts):
            raise ValueError("constituent events must be distinct")
        object.__setattr__(self, "interval", span(self.cevts, self.ts))

    def __str__(self) -> str:
        ids = ",".join(str(e.id) for e in self.cevts)
        return f"raise {self.et} at {self.pi} id={self.id} cevts=[{ids}] t={self.ts}"


Event = Union[PrimitiveEvent, CompositeEvent]


def primitives(e: Event) -> Iterator[PrimitiveEvent]:
    """All primitive events at the leaves of ``e``'s constituent tree."""
    if isinstance(e, PrimitiveEvent):
        yield e
        return
    for c in e.cevts:
        yield from primitives(c)


def span(cevts, raised_at: int) -> Interval:
    """Occurrence interval of a composite made of ``cevts``.

    Constituent trees without any primitive leaf (composites of a
    zero-lower-bound multiplicity that saw no child event) carry no
    occurrence time; when nothing else remains the raise tick is used.
    """
    ticks = [p.ts for e in cevts for p in primitives(e)]
    if not ticks:
        return Interval(raised_at, raised_at)
    return Interval(min(ticks), max(ticks))


def event_interval(e: Event) -> Interval:
    return e.interval


def interval_before(i1: Interval, i2: Interval) -> bool:
    return i1.end < i2.start


def prim_compatible(et1: PrimitiveEventType, et2: PrimitiveEventType) -> bool:
    """True iff events of type et1 are (indirect) instances of et2."""
    return (et1.op is et2.op or et2.op is Operation.STAR) and (
        pt_ends(et2.pt, et1.pt) or pt_equal(et2.pt, et1.pt)
    )


def comp_compatible(et1: CompositeEventType, et2: CompositeEventType) -> bool:
    return (et1.name == et2.name or et2.name == STAR) and (
        pt_ends(et2.pt, et1.pt) or pt_equal(et2.pt, et1.pt)
    )


def compatible(et1: EventType, et2: EventType) -> bool:
    """Compatibility across both kinds; a primitive never matches a composite type."""
    if isinstance(et1, PrimitiveEventType) and isinstance(et2, PrimitiveEventType):
        return prim_compatible(et1, et2)
    if isinstance(et1, CompositeEventType) and isinstance(et2, CompositeEventType):
        return comp_compatible(et1, et2)
    return False
