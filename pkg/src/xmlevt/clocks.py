"""Timestamps per time service level, Lamport clocks, and ordering of distributed events.

Events at one location are totally ordered. Events at different locations are
ordered temporally when both locations run synchronized clocks (tsl3) in a
common group, and causally otherwise.
"""

from __future__ import annotations

import shlex
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Iterable, Optional


class TSL(IntEnum):
    """Time service level: logical, unsynchronized physical, group-synchronized physical."""

    TSL1 = 1
    TSL2 = 2
    TSL3 = 3


class ClockError(ValueError):
    pass


@dataclass(frozen=True)
class Timestamp:
    lt: int
    pid: str
    tsl: TSL
    pt: Optional[int] = None  # ms
    gids: frozenset = frozenset()

    def __post_init__(self):
        if self.lt < 1:
            raise ClockError(f"logical count must be positive, got {self.lt}")
        if (self.pt is not None) != (self.tsl >= TSL.TSL2):
            raise ClockError(f"physical count must be present exactly for tsl2 and tsl3 ({self.tsl.name})")
        if self.gids and self.tsl is not TSL.TSL3:
            raise ClockError("only tsl3 timestamps carry groups")


@dataclass
class LocationState:
    pid: str
    tsl: TSL
    gids: frozenset = frozenset()
    clock: Optional[Callable[[], int]] = None  # physical clock source in ms
    gl: int = 1  # local granularity in ms
    lt: int = 0

    def _pt(self, pt: Optional[int]) -> Optional[int]:
        if self.tsl < TSL.TSL2:
            return None
        if pt is not None:
            return pt
        if self.clock is None:
            raise ClockError(f"location {self.pid} has no physical clock source")
        return self.clock()


def tick_local(loc: LocationState, pt: Optional[int] = None) -> Timestamp:
    """Timestamp for a local event; ``pt`` overrides the clock source."""
    loc.lt += 1
    return Timestamp(loc.lt, loc.pid, loc.tsl, loc._pt(pt), loc.gids)


def tick_import(loc: LocationState, remote: Timestamp, pt: Optional[int] = None) -> Timestamp:
    """Timestamp for storing a remote event locally (Lamport's receive rule)."""
    if remote.pid == loc.pid:
        raise ClockError("an imported event must come from another location")
    loc.lt = max(loc.lt, remote.lt) + 1
    return Timestamp(loc.lt, loc.pid, loc.tsl, loc._pt(pt), loc.gids)


@dataclass(frozen=True)
class GroupConfig:
    gid: str
    precision: int  # π in ms
    granularities: tuple[int, ...]  # g_l of every member, ms

    @property
    def global_granularity(self) -> int:
        return group_granularity(self)


def group_granularity(group: GroupConfig) -> int:
    """Smallest multiple of the coarsest member granularity that exceeds the precision."""
    if not group.granularities:
        raise ClockError(f"group {group.gid} has no members")
    if group.precision <= 0 or any(g <= 0 for g in group.granularities):
        raise ClockError(f"group {group.gid}: precision and granularities must be positive")
    gl = max(group.granularities)
    return (group.precision // gl + 1) * gl


@dataclass(frozen=True)
class TraceEvent:
    eid: str
    ts: Timestamp
    wraps: Optional[str] = None
    pub: Optional[int] = None  # stored only
    dlv: Optional[int] = None


class Relation(str, Enum):
    BEFORE = "<"
    AFTER = ">"
    EQUAL = "="
    CONCURRENT = "||"

    def inverse(self) -> "Relation":
        return {Relation.BEFORE: Relation.AFTER, Relation.AFTER: Relation.BEFORE}.get(self, self)


class OrderKind(str, Enum):
    CAUSAL = "causal"
    TEMPORAL = "temporal"


class OrderMode(str, Enum):
    DEFAULT = "default"
    CAUSAL = "causal"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class OrderResult:
    relation: Relation
    kind: OrderKind

    def render(self, a: str, b: str) -> str:
        return f"{a} {self.relation.value} {b} ({self.kind.value})"


def _compare(x, y) -> Relation:
    return Relation.BEFORE if x < y else Relation.AFTER if x > y else Relation.EQUAL


@dataclass
class Trace:
    events: dict[str, TraceEvent] = field(default_factory=dict)
    groups: dict[str, GroupConfig] = field(default_factory=dict)

    def add(self, e: TraceEvent) -> None:
        if e.eid in self.events:
            raise ClockError(f"duplicate event {e.eid}")
        if e.wraps is not None:
            remote = self.event(e.wraps)
            if remote.ts.pid == e.ts.pid:
                raise ClockError(f"{e.eid} wraps {e.wraps} from its own location")
        self.events[e.eid] = e

    def event(self, eid: str) -> TraceEvent:
        try:
            return self.events[eid]
        except KeyError:
            raise ClockError(f"unknown event {eid}") from None

    def _successors(self, visible: Optional[set[str]]) -> dict[str, list[str]]:
        chosen = [e for e in self.events.values() if visible is None or e.eid in visible]
        succ: dict[str, list[str]] = defaultdict(list)
        by_pid: dict[str, list[TraceEvent]] = defaultdict(list)
        for e in chosen:
            by_pid[e.ts.pid].append(e)
            if e.wraps is not None and (visible is None or e.wraps in visible):
                succ[e.wraps].append(e.eid)
        for local in by_pid.values():
            local.sort(key=lambda e: e.ts.lt)
            for a, b in zip(local, local[1:]):
                succ[a.eid].append(b.eid)
        return succ

    def happened_before(self, a: str, b: str, visible: Optional[Iterable[str]] = None) -> bool:
        """Reachability over local order and import edges, optionally only through ``visible``."""
        self.event(a), self.event(b)
        vis = set(visible) if visible is not None else None
        succ = self._successors(vis)
        seen = set()
        queue = deque(succ.get(a, ()))
        while queue:
            n = queue.popleft()
            if n == b:
                return True
            if n not in seen:
                seen.add(n)
                queue.extend(succ.get(n, ()))
        return False

    def _causal(self, a: TraceEvent, b: TraceEvent, visible) -> OrderResult:
        if a.ts.pid == b.ts.pid:
            return OrderResult(_compare(a.ts.lt, b.ts.lt), OrderKind.CAUSAL)
        if a.ts.lt < b.ts.lt and self.happened_before(a.eid, b.eid, visible):
            rel = Relation.BEFORE
        elif b.ts.lt < a.ts.lt and self.happened_before(b.eid, a.eid, visible):
            rel = Relation.AFTER
        else:
            rel = Relation.CONCURRENT
        return OrderResult(rel, OrderKind.CAUSAL)

    def order(self, a: str, b: str, mode: OrderMode = OrderMode.DEFAULT) -> OrderResult:
        ea, eb = self.event(a), self.event(b)
        ta, tb = ea.ts, eb.ts
        if ta.pid == tb.pid:
            if ta.tsl is TSL.TSL3 and mode is not OrderMode.CAUSAL:
                return OrderResult(_compare(ta.pt, tb.pt), OrderKind.TEMPORAL)
            return self._causal(ea, eb, None)
        shared = sorted(ta.gids & tb.gids)
        if ta.tsl is TSL.TSL3 and tb.tsl is TSL.TSL3 and shared and mode is not OrderMode.CAUSAL:
            gid = shared[0]
            if gid not in self.groups:
                raise ClockError(f"unknown group {gid}")
            gg = group_granularity(self.groups[gid])
            diff = tb.pt // gg - ta.pt // gg
            rel = Relation.BEFORE if diff >= 2 else Relation.AFTER if diff <= -2 else Relation.CONCURRENT
            return OrderResult(rel, OrderKind.TEMPORAL)
        return self._causal(ea, eb, None)

    def order_view(self, a: str, b: str, visible: Iterable[str]) -> OrderResult:
        """Causal order as seen by a document that stores only ``visible``."""
        vis = set(visible)
        for eid in (a, b):
            self.event(eid)
            if eid not in vis:
                raise ClockError(f"{eid} is not visible")
        return self._causal(self.events[a], self.events[b], vis)


def happened_before(e1: TraceEvent, e2: TraceEvent, trace: Trace) -> bool:
    return trace.happened_before(e1.eid, e2.eid)


def order(e1: TraceEvent, e2: TraceEvent, mode: OrderMode, trace: Trace) -> OrderResult:
    return trace.order(e1.eid, e2.eid, OrderMode(mode))


def order_view(e1: TraceEvent, e2: TraceEvent, visible: Iterable[str], trace: Trace) -> OrderResult:
    return trace.order_view(e1.eid, e2.eid, visible)


# trace files ---------------------------------------------------------------

class TraceSyntaxError(ValueError):
    def __init__(self, message: str, line: int, source: str = "<trace>"):
        super().__init__(f"{source}:{line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Query:
    line: int
    a: str
    b: str
    mode: OrderMode = OrderMode.DEFAULT
    view: Optional[tuple[str, ...]] = None


_MODES = {"c": OrderMode.CAUSAL, "t": OrderMode.TEMPORAL, "causal": OrderMode.CAUSAL,
          "temporal": OrderMode.TEMPORAL, "default": OrderMode.DEFAULT}


def _options(args: list[str], allowed: set[str], line: int, source: str) -> dict[str, str]:
    out = {}
    for a in args:
        key, eq, value = a.partition("=")
        if not eq or key not in allowed or not value:
            raise TraceSyntaxError(f"unexpected argument {a!r}", line, source)
        out[key] = value
    return out


def _int(value: str, what: str, line: int, source: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise TraceSyntaxError(f"{what} must be an integer, got {value!r}", line, source) from None


class TraceReplay:
    """Builds a :class:`Trace` line by line and answers ``order`` queries."""

    def __init__(self, source: str = "<trace>"):
        self.source = source
        self.trace = Trace()
        self.locations: dict[str, LocationState] = {}
        self.precisions: dict[str, int] = {}
        self.last_at: dict[str, str] = {}

    def _sync_groups(self) -> None:
        for gid, pi in self.precisions.items():
            members = tuple(loc.gl for loc in self.locations.values() if gid in loc.gids)
            self.trace.groups[gid] = GroupConfig(gid, pi, members)

    def parse(self, text: str) -> list[Query]:
        """Parse the whole trace; raise TraceSyntaxError or ClockError."""
        queries = []
        for n, raw in enumerate(text.splitlines(), 1):
            try:
                parts = shlex.split(raw, comments=True)
            except ValueError as exc:
                raise TraceSyntaxError(str(exc), n, self.source) from None
            if not parts:
                continue
            q = self.line(parts, n)
            if q is not None:
                queries.append(q)
        self._sync_groups()
        return queries

    def line(self, parts: list[str], n: int) -> Optional[Query]:
        cmd, args = parts[0], parts[1:]
        src = self.source
        if cmd == "loc":
            if not args:
                raise TraceSyntaxError("loc needs a location id", n, src)
            opts = _options(args[1:], {"tsl", "groups", "gl"}, n, src)
            if opts.get("tsl") not in ("1", "2", "3"):
                raise TraceSyntaxError("loc needs tsl=1, 2 or 3", n, src)
            tsl = TSL(int(opts["tsl"]))
            gids = frozenset(g for g in opts.get("groups", "").split(",") if g)
            if gids and tsl is not TSL.TSL3:
                raise TraceSyntaxError("only tsl3 locations join groups", n, src)
            if args[0] in self.locations:
                raise TraceSyntaxError(f"duplicate location {args[0]}", n, src)
            gl = _int(opts.get("gl", "1"), "gl", n, src)
            self.locations[args[0]] = LocationState(args[0], tsl, gids, gl=gl)
            return None
        if cmd == "group":
            if not args:
                raise TraceSyntaxError("group needs an id", n, src)
            opts = _options(args[1:], {"pi"}, n, src)
            if "pi" not in opts:
                raise TraceSyntaxError("group needs pi=<ms>", n, src)
            self.precisions[args[0]] = _int(opts["pi"], "pi", n, src)
            return None
        if cmd == "evt":
            if len(args) < 3 or args[1] != "at":
                raise TraceSyntaxError("expected: evt <eid> at <pid> [pt=<ms>]", n, src)
            opts = _options(args[3:], {"pt", "pub", "dlv"}, n, src)
            loc = self._loc(args[2], n)
            pt = self._pt(loc, opts, n)
            self._record(TraceEvent(args[0], tick_local(loc, pt), None,
                                    *self._pubdlv(opts, n)), loc)
            return None
        if cmd == "import":
            if len(args) < 3 or args[1] != "wraps":
                raise TraceSyntaxError("expected: import <eid> wraps <rid> [at <pid>] [pt=<ms>]", n, src)
            eid, rid, rest = args[0], args[2], args[3:]
            remote = self.trace.event(rid)
            if rest[:1] == ["at"]:
                if len(rest) < 2:
                    raise TraceSyntaxError("import ... at needs a location", n, src)
                loc = self._loc(rest[1], n)
                opts = _options(rest[2:], {"pt", "pub", "dlv"}, n, src)
                ts = tick_import(loc, remote.ts, self._pt(loc, opts, n))
                self._record(TraceEvent(eid, ts, rid, *self._pubdlv(opts, n)), loc)
                return None
            if rest:
                raise TraceSyntaxError(f"unexpected argument {rest[0]!r}", n, src)
            # turn an already recorded local event into the import of ``rid``
            old = self.trace.event(eid)
            loc = self.locations[old.ts.pid]
            if self.last_at.get(loc.pid) != eid or old.wraps is not None:
                raise ClockError(f"{eid} must be the latest event at {loc.pid} to become an import")
            del self.trace.events[eid]
            loc.lt -= 1
            ts = tick_import(loc, remote.ts, old.ts.pt)
            self._record(TraceEvent(eid, ts, rid, old.pub, old.dlv), loc)
            return None
        if cmd == "order":
            if len(args) < 2:
                raise TraceSyntaxError("expected: order <eid1> <eid2> [mode=c|t] [view=..]", n, src)
            opts = _options(args[2:], {"mode", "view"}, n, src)
            if opts.get("mode", "default") not in _MODES:
                raise TraceSyntaxError(f"unknown mode {opts['mode']!r}", n, src)
            view = tuple(v for v in opts["view"].split(",") if v) if "view" in opts else None
            return Query(n, args[0], args[1], _MODES[opts.get("mode", "default")], view)
        raise TraceSyntaxError(f"unknown command {cmd!r}", n, src)

    def _loc(self, pid: str, n: int) -> LocationState:
        if pid not in self.locations:
            raise ClockError(f"unknown location {pid}")
        return self.locations[pid]

    def _pt(self, loc: LocationState, opts: dict, n: int) -> Optional[int]:
        if loc.tsl >= TSL.TSL2:
            if "pt" not in opts:
                raise TraceSyntaxError(f"events at tsl{int(loc.tsl)} location {loc.pid} need pt=<ms>",
                                       n, self.source)
            return _int(opts["pt"], "pt", n, self.source)
        if "pt" in opts:
            raise TraceSyntaxError(f"tsl1 location {loc.pid} has no physical clock", n, self.source)
        return None

    def _pubdlv(self, opts: dict, n: int) -> tuple[Optional[int], Optional[int]]:
        return tuple(_int(opts[k], k, n, self.source) if k in opts else None for k in ("pub", "dlv"))

    def _record(self, e: TraceEvent, loc: LocationState) -> None:
        self.trace.add(e)
        self.last_at[loc.pid] = e.eid

    def answer(self, q: Query) -> str:
        self._sync_groups()
        if q.view is not None:
            result = self.trace.order_view(q.a, q.b, q.view)
        else:
            result = self.trace.order(q.a, q.b, q.mode)
        return result.render(q.a, q.b)


def replay_trace(text: str, source: str = "<trace>") -> list[str]:
    """Parse a trace file and return one output line per ``order`` query."""
    replay = TraceReplay(source)
    queries = replay.parse(text)
    return [replay.answer(q) for q in queries]
