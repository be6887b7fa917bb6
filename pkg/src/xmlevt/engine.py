"""Event trees and event graphs: composite event detection over primitive events.

An :class:`EventGraph` holds one :class:`EventTree` per composite event type.
Trees are processed in dependency order for every primitive event; inside a
tree nodes are visited in postorder so a parent sees what its children raised
in the same pass.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Iterable, Optional, Sequence, Union

from .condition import Condition
from .document import Document
from .events import (CompositeEvent, CompositeEventType, Event, EventType, PrimitiveEvent,
                     compatible, interval_before, pt_ends)
from .paths import (PathInstance, PathType, pi_equal, pi_project, pt_contains, pt_equal,
                    pt_intersect_ab, pt_intersect_lb)


class Opr(str, Enum):
    CONJ = "and"
    DISJ = "or"
    SEQ = "seq"
    MULT = "mult"


class Context(str, Enum):
    CUMULATIVE = "cumulative"
    CHRONICLE = "chronicle"
    RECENT = "recent"
    CONTINUOUS = "continuous"
    UNRESTRICTED = "unrestricted"


class Mode(str, Enum):
    EARLIEST = "earliest"
    NONLOCAL = "nonlocal"
    CUSTOM = "custom"


class TreeValidationError(ValueError):
    def __init__(self, node: str, rule: str):
        super().__init__(f"node {node}: {rule}")
        self.node = node
        self.rule = rule


class GraphError(ValueError):
    pass


class GraphClosedError(RuntimeError):
    pass


# group key used when the hierarchical context is off
_ALL = "<all>"


class EventTypeNode:
    """Leaf storing every event whose dynamic type is compatible to ``et``."""

    def __init__(self, et: EventType):
        self.et = et
        self.evts: list[Event] = []

    @property
    def pt(self) -> PathType:
        return self.et.pt

    @property
    def label(self) -> str:
        return str(self.et)

    def __repr__(self) -> str:
        return f"EventTypeNode({self.et})"


@dataclass
class Potential:
    """A detected combination not yet released by mode or condition."""

    cevts: list[Event]
    key: object
    pi: Optional[PathInstance] = None  # set for constituent-free multiplicity raises


Node = Union[EventTypeNode, "OperatorNode"]


class OperatorNode:
    def __init__(self, opr: Opr, children: Sequence[Node], *, pt: Optional[PathType] = None,
                 name: Optional[str] = None, context: Context = Context.CHRONICLE,
                 hierarchical: bool = True, mode: Mode = Mode.EARLIEST,
                 cond: Optional[Condition] = None, lower: int = 1, upper: float = math.inf):
        self.opr = Opr(opr)
        self.children = list(children)
        self.explicit_pt = pt
        self.name = name
        self.context = Context(context)
        self.hierarchical = hierarchical
        self.mode = Mode(mode)
        self.cond = cond
        self.lower = lower
        self.upper = upper
        self.pt: Optional[PathType] = None
        self.et: Optional[CompositeEventType] = None
        self.evts: list[CompositeEvent] = []
        self.pending: list[Potential] = []
        self._last: dict[object, CompositeEvent] = {}
        self._acc: dict[object, list[Event]] = {}

    @property
    def label(self) -> str:
        return self.name or self.opr.value

    def __repr__(self) -> str:
        return f"OperatorNode({self.opr.value}, {self.label}, pt={self.pt})"

    def reset(self) -> None:
        self.evts.clear()
        self.pending.clear()
        self._last.clear()
        self._acc.clear()

    # grouping -------------------------------------------------------------

    def key(self, e: Event):
        """Hierarchical group of ``e``: its projection onto this node's path type."""
        if not self.hierarchical:
            return _ALL
        return pi_project(self.pt, e.pi)

    def _members(self, child: Node, key) -> list[Event]:
        return [e for e in child.evts if self.key(e) == key]

    def _groups(self, fresh) -> list:
        keys = []
        for _, e in fresh:
            k = self.key(e)
            if k is not None and k not in keys:
                keys.append(k)
        return keys

    def _consume(self, events: Iterable[Event]) -> None:
        for e in events:
            for child in self.children:
                if any(x is e for x in child.evts):
                    child.evts[:] = [x for x in child.evts if x is not e]
                    break

    def _before(self, a: Event, b: Event) -> bool:
        # interval semantics come with the hierarchical context; plain Snoop
        # contexts order by detection time
        if self.hierarchical:
            return interval_before(a.interval, b.interval)
        return a.ts < b.ts

    def _propose(self, cevts: list[Event], key) -> None:
        if self.context is Context.CUMULATIVE:
            for p in self.pending:
                if p.key == key:
                    p.cevts.extend(e for e in cevts if all(e is not x for x in p.cevts))
                    return
        self.pending.append(Potential(list(cevts), key))

    # detection ------------------------------------------------------------

    def _detect_conj(self, fresh) -> None:
        ctx = self.context
        for key in self._groups(fresh):
            lists = [self._members(c, key) for c in self.children]
            terms = [(i, e) for i, e in fresh if self.key(e) == key]
            if ctx is Context.CUMULATIVE:
                if all(lists):
                    picked = [e for lst in lists for e in lst]
                    self._consume(picked)
                    self._propose(picked, key)
            elif ctx is Context.CHRONICLE:
                while all(lists):
                    picked = [lst[0] for lst in lists]
                    self._consume(picked)
                    self._propose(picked, key)
                    lists = [self._members(c, key) for c in self.children]
            elif ctx is Context.RECENT:
                for lst in lists:
                    self._consume(lst[:-1])
                if all(lists):
                    self._propose([lst[-1] for lst in lists], key)
            elif ctx is Context.CONTINUOUS:
                used: list[Event] = []
                for i, t in terms:
                    if all(x is not t for x in self.children[i].evts):
                        continue
                    others = [list(lst) for j, lst in enumerate(lists) if j != i]
                    while all(others):
                        picked = [o.pop() for o in others]
                        self._propose(picked + [t], key)
                        used.extend(picked)
                self._consume(used)
            else:
                for i, t in terms:
                    others = [lst for j, lst in enumerate(lists) if j != i]
                    for combo in itertools.product(*others):
                        self._propose(list(combo) + [t], key)

    def _detect_seq(self, fresh) -> None:
        left, right = self.children
        ctx = self.context
        for key in self._groups(fresh):
            lefts = self._members(left, key)
            rights = self._members(right, key)
            if any(i == 0 and self.key(e) == key for i, e in fresh):
                terms = rights
            else:
                terms = [e for i, e in fresh if i == 1 and self.key(e) == key]
            used: list[Event] = []
            for r in terms:
                if all(x is not r for x in right.evts):
                    continue
                if ctx is Context.CONTINUOUS:
                    ls = [l for l in lefts if self._before(l, r)]
                else:
                    ls = [l for l in self._members(left, key) if self._before(l, r)]
                if not ls:
                    continue
                if ctx is Context.CUMULATIVE:
                    self._propose(ls + [r], key)
                    self._consume(ls + [r])
                elif ctx is Context.CHRONICLE:
                    self._propose([ls[0], r], key)
                    self._consume([ls[0], r])
                elif ctx is Context.RECENT:
                    self._propose([ls[-1], r], key)
                    self._consume([r])
                elif ctx is Context.CONTINUOUS:
                    for l in reversed(ls):
                        self._propose([l, r], key)
                    used.extend(ls)
                    used.append(r)
                else:
                    for l in ls:
                        self._propose([l, r], key)
            self._consume(used)

    def _detect_disj(self, fresh) -> None:
        for key in self._groups(fresh):
            if self.context is Context.CUMULATIVE:
                picked = [e for c in self.children for e in self._members(c, key)]
                self._consume(picked)
                self._propose(picked, key)
                continue
            for i, e in fresh:
                if self.key(e) != key or all(x is not e for x in self.children[i].evts):
                    continue
                if self.context is not Context.UNRESTRICTED:
                    self._consume([e])
                self._propose([e], key)

    def _detect_mult(self, fresh, run: "_Run") -> None:
        child = self.children[0]
        for _, e in fresh:
            key = self.key(e)
            if key is None:
                continue
            child.evts[:] = [x for x in child.evts if x is not e]
            self._integrate(e, key)
        if self.lower != 0:
            return
        e = run.primitive
        if run.kind == "open":
            for pi in run.doc.find_instances(self.pt):
                self._create(pi, run)
        elif run.kind == "flush":
            for key, last in list(self._last.items()):
                self._reraise(key, last.pi, run)
        elif e is not None and (pt_ends(self.pt, e.et.pt) or pt_equal(self.pt, e.et.pt)):
            if e.et.op.value == "ins":
                self._create(e.pi, run)
            elif e.et.op.value == "del":
                self._forget(self.key(e))
            else:
                self._reraise(self.key(e), e.pi, run)

    def _integrate(self, e: Event, key) -> None:
        pend = next((p for p in reversed(self.pending) if p.key == key), None)
        if pend is not None and len(pend.cevts) < self.upper:
            pend.cevts.append(e)
            return
        last = self._last.get(key)
        if last is not None and len(last.cevts) < self.upper and any(x is last for x in self.evts):
            # the integrated composite is waived
            self.evts[:] = [x for x in self.evts if x is not last]
            self.pending.append(Potential(list(last.cevts) + [e], key, last.pi))
            return
        acc = self._acc.setdefault(key, [])
        acc.append(e)
        if len(acc) >= max(self.lower, 1):
            del self._acc[key]
            self.pending.append(Potential(acc, key))

    def _create(self, pi: PathInstance, run: "_Run") -> None:
        key = self.key_of_instance(pi)
        self._forget(key)
        self.pending.append(Potential([], key, pi))

    def _forget(self, key) -> None:
        self._acc.pop(key, None)
        self.pending = [p for p in self.pending if p.key != key]
        last = self._last.pop(key, None)
        if last is not None:
            self.evts[:] = [x for x in self.evts if x is not last]

    def _reraise(self, key, pi: PathInstance, run: "_Run") -> None:
        last = self._last.get(key)
        if any(p.key == key for p in self.pending):
            return
        if last is not None and any(x is last for x in self.evts):
            return
        if run.doc.exists(pi):
            self.pending.append(Potential([], key, pi))

    def key_of_instance(self, pi: PathInstance):
        return pi_project(self.pt, pi) if self.hierarchical else _ALL

    # release --------------------------------------------------------------

    def _placement(self, pot: Potential) -> PathInstance:
        if pot.pi is not None:
            return pot.pi
        first = min(pot.cevts, key=lambda e: e.id)
        pt = pt_intersect_ab(self.pt, first.pi.pt)
        projected = pi_project(pt, first.pi)
        return projected if projected is not None else first.pi

    def _ready(self, pot: Potential, run: "_Run") -> bool:
        if run.kind != "flush":
            if self.mode is Mode.CUSTOM:
                return False
            if self.mode is Mode.NONLOCAL:
                e = run.primitive
                if e is None:
                    return False
                here = pi_project(self.pt, self._placement(pot))
                if pi_equal(here, pi_project(self.pt, e.pi)):
                    return False
        if self.cond is not None:
            pi = self._placement(pot)
            if not run.doc.exists(pi):
                return False
            return run.doc.eval_condition(pi, self.cond, self_rooted=True)
        return True

    def evaluate(self, fresh: list[tuple[int, Event]], run: "_Run") -> list[CompositeEvent]:
        """Detect potentials from ``fresh`` child events, then release what may be raised."""
        fresh = sorted(fresh, key=lambda x: x[1].id)
        if self.opr is Opr.MULT:
            self._detect_mult(fresh, run)
        elif fresh and self.opr is Opr.CONJ:
            self._detect_conj(fresh)
        elif fresh and self.opr is Opr.SEQ:
            self._detect_seq(fresh)
        elif fresh:
            self._detect_disj(fresh)
        ready = [p for p in self.pending if self._ready(p, run)]
        if not ready:
            return []
        self.pending = [p for p in self.pending if all(p is not r for r in ready)]
        ready.sort(key=lambda p: (sorted(e.id for e in p.cevts), str(self._placement(p))))
        raised = []
        for pot in ready:
            pi = self._placement(pot)
            c = CompositeEvent(
                run.doc.next_event_id(), CompositeEventType(self.et.name, pi.pt), pi,
                tuple(sorted(pot.cevts, key=lambda e: e.id)), run.doc.tick)
            self.evts.append(c)
            if self.opr is Opr.MULT:
                self._last[pot.key] = c
            raised.append(c)
        return raised

    def triggered(self, run: "_Run") -> bool:
        """Whether to evaluate without fresh child events."""
        if run.kind in ("open", "flush"):
            return True
        e = run.primitive
        if e is None:
            return False
        if self.cond is not None and (pt_contains(self.pt, e.et.pt) or pt_equal(self.pt, e.et.pt)):
            return True
        if self.mode is Mode.NONLOCAL:
            return True
        return (self.opr is Opr.MULT and self.lower == 0
                and (pt_ends(self.pt, e.et.pt) or pt_equal(self.pt, e.et.pt)))


@dataclass
class _Run:
    doc: Document
    kind: str  # "event", "open" or "flush"
    primitive: Optional[PrimitiveEvent] = None
    raised: list[tuple["EventTree", OperatorNode, CompositeEvent]] = field(default_factory=list)


class EventTree:
    """Operator tree realizing one composite event type ``name(pt)``."""

    def __init__(self, name: str, root: OperatorNode, pt: Optional[PathType] = None):
        if not isinstance(root, OperatorNode):
            raise TreeValidationError(name, "the root of an event tree must be an operator")
        self.name = name
        self.root = root
        if pt is not None:
            root.explicit_pt = pt
        root.name = name
        self.postorder: list[Node] = []
        self.parent: dict[int, tuple[OperatorNode, int]] = {}
        self._index(root)
        n = 0
        for node in self.postorder:
            if isinstance(node, OperatorNode) and node is not root:
                n += 1
                if node.name is None:
                    node.name = f"{name}.{n}"
        self.et: Optional[CompositeEventType] = None

    def _index(self, node: Node) -> None:
        if isinstance(node, OperatorNode):
            for i, child in enumerate(node.children):
                if id(child) in self.parent or child is self.root:
                    raise TreeValidationError(node.label, "nodes cannot be shared")
                self.parent[id(child)] = (node, i)
                self._index(child)
        self.postorder.append(node)

    @property
    def leaves(self) -> list[EventTypeNode]:
        return [n for n in self.postorder if isinstance(n, EventTypeNode)]

    @property
    def operators(self) -> list[OperatorNode]:
        return [n for n in self.postorder if isinstance(n, OperatorNode)]

    def reset(self) -> None:
        for node in self.postorder:
            if isinstance(node, OperatorNode):
                node.reset()
            else:
                node.evts.clear()

    def unconsumed(self) -> list[CompositeEvent]:
        """Composites raised by inner operator nodes and still stored there."""
        return sorted((c for n in self.operators if n is not self.root for c in n.evts),
                      key=lambda c: c.id)


def derive_path_types(tree: EventTree) -> EventTree:
    """Set every operator's path type bottom up and check the tree is valid."""
    for node in tree.postorder:
        if isinstance(node, EventTypeNode):
            continue
        arity = len(node.children)
        if node.opr is Opr.SEQ and arity != 2:
            raise TreeValidationError(node.label, "seq needs exactly two operands")
        if node.opr is Opr.MULT and arity != 1:
            raise TreeValidationError(node.label, "mult needs exactly one operand")
        if node.opr in (Opr.CONJ, Opr.DISJ) and arity < 2:
            raise TreeValidationError(node.label, f"{node.opr.value} needs at least two operands")
        if node.opr is Opr.MULT and not 0 <= node.lower <= node.upper:
            raise TreeValidationError(node.label, f"bounds [{node.lower},{node.upper}] need 0 <= l <= u")
        if node.explicit_pt is not None:
            pt = node.explicit_pt
        elif node.opr is Opr.MULT:
            cpt = node.children[0].pt
            if len(cpt.steps) < 2:
                raise TreeValidationError(
                    node.label, f"cannot omit the last step of {cpt}; specify the path type explicitly")
            pt = PathType(cpt.kind, cpt.steps[:-1])
        else:
            pt = reduce(pt_intersect_lb, (c.pt for c in node.children))
            if pt is None:
                raise TreeValidationError(
                    node.label, "left-bound intersection of the operands is null; "
                                "the path type must be specified explicitly")
        for child in node.children:
            cpt = child.pt
            if pt.absolute and cpt.absolute and pt_intersect_lb(pt, cpt) is None:
                raise TreeValidationError(node.label, f"{pt} and operand {cpt} share no leading step")
            if not pt.absolute and cpt.absolute and not pt_contains(pt, cpt):
                raise TreeValidationError(node.label, f"{pt} is not contained in operand {cpt}")
        node.pt = pt
        node.et = CompositeEventType(node.name, pt)
    tree.et = tree.root.et
    return tree


def process_tree(tree: EventTree, events: list[Event], run: _Run) -> list[Event]:
    """Postorder pass over ``tree``; returns ``events`` plus what the root raised."""
    fresh: dict[int, list[tuple[int, Event]]] = {}
    out = list(events)
    for node in tree.postorder:
        if isinstance(node, EventTypeNode):
            new = [e for e in events if compatible(e.et, node.et)]
            node.evts.extend(new)
        else:
            mine = fresh.get(id(node), [])
            new = node.evaluate(mine, run) if mine or node.triggered(run) else []
            run.raised.extend((tree, node, c) for c in new)
        if not new:
            continue
        if node is tree.root:
            out.extend(new)
        else:
            parent, index = tree.parent[id(node)]
            fresh.setdefault(id(parent), []).extend((index, e) for e in new)
    return out


def _feeds(et: CompositeEventType, leaf_et: EventType) -> bool:
    """Whether composites of type ``et`` may be stored by a leaf of type ``leaf_et``."""
    if not isinstance(leaf_et, CompositeEventType):
        return False
    if leaf_et.name not in (et.name, "*"):
        return False
    a, b = et.pt, leaf_et.pt
    # relative declared types only fix a suffix of their raised path types
    return pt_equal(a, b) or pt_ends(b, a) or (not a.absolute and pt_ends(a, b))


class EventGraph:
    """All event trees registered with one document."""

    def __init__(self, trees: Iterable[EventTree] = ()):
        self.trees: list[EventTree] = []
        self.dependents: dict[str, list[str]] = {}
        self.visits: Counter = Counter()
        self.doc: Optional[Document] = None
        self.closed = False
        self._origin: dict[int, tuple[EventTree, OperatorNode]] = {}
        for t in trees:
            self.add(t)

    def tree(self, name: str) -> EventTree:
        for t in self.trees:
            if t.name == name:
                return t
        raise KeyError(name)

    def add(self, tree: EventTree) -> None:
        if any(t.name == tree.name for t in self.trees):
            raise GraphError(f"duplicate event type name {tree.name!r}")
        derive_path_types(tree)
        trees = self.trees + [tree]
        deps = {t.name: [u.name for u in trees if any(_feeds(t.et, leaf.et) for leaf in u.leaves)]
                for t in trees}
        closure = _closures(deps)
        for name, reach in closure.items():
            if name in reach:
                raise GraphError(f"event tree {name!r} depends on itself")
        self.trees = trees
        self.dependents = deps

    def closure(self, name: str) -> set[str]:
        return _closures(self.dependents)[name]

    def purge(self, names: Sequence[str]) -> list[str]:
        return purge(names, self.dependents)

    # lifecycle ------------------------------------------------------------

    def open(self, doc: Document) -> list[CompositeEvent]:
        """Register with ``doc``; zero-lower-bound multiplicities raise for existing instances."""
        self.doc = doc
        self.closed = False
        for t in self.trees:
            t.reset()
        return self._run(_Run(doc, "open"))

    def process(self, e: PrimitiveEvent) -> list[CompositeEvent]:
        self._check_open()
        return self._run(_Run(self.doc, "event", e))

    def flush(self) -> list[CompositeEvent]:
        self._check_open()
        return self._run(_Run(self.doc, "flush"))

    def close(self) -> list[CompositeEvent]:
        raised = self.flush()
        for t in self.trees:
            t.reset()
        self.closed = True
        return raised

    def _check_open(self) -> None:
        if self.closed:
            raise GraphClosedError("event graph is closed")
        if self.doc is None:
            raise GraphClosedError("event graph is not open")

    def _run(self, run: _Run) -> list[CompositeEvent]:
        roots = [t.name for t in self.trees
                 if not any(t.name in self.dependents[u.name] for u in self.trees)]
        events: list[Event] = [run.primitive] if run.primitive is not None else []
        current = roots
        while current:
            for name in current:
                events = process_tree(self.tree(name), events, run)
                self.visits[name] += 1
            nxt: list[str] = []
            for name in current:
                for dep in self.dependents[name]:
                    if dep not in nxt:
                        nxt.append(dep)
            current = purge(nxt, self.dependents)
        for tree, node, c in run.raised:
            self._origin[c.id] = (tree, node)
        return [c for _, _, c in run.raised]

    def origin(self, c: CompositeEvent) -> tuple[EventTree, OperatorNode]:
        """Tree and operator node that raised ``c``."""
        return self._origin[c.id]

    def is_root_raise(self, c: CompositeEvent) -> bool:
        tree, node = self._origin[c.id]
        return node is tree.root

    def dump(self) -> dict[str, dict[str, list]]:
        """Stored events and pending potentials per tree and node label."""
        state = {}
        for t in self.trees:
            nodes = {}
            for n in t.postorder:
                entry = {"evts": list(n.evts)}
                if isinstance(n, OperatorNode):
                    entry["pending"] = [list(p.cevts) for p in n.pending]
                nodes[n.label] = entry
            state[t.name] = nodes
        return state


def _closures(deps: dict[str, list[str]]) -> dict[str, set[str]]:
    out = {}
    for start in deps:
        seen: set[str] = set()
        stack = list(deps[start])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(deps.get(n, ()))
        out[start] = seen
    return out


def purge(names: Sequence[str], deps: dict[str, list[str]]) -> list[str]:
    """Drop every tree that lies in the transitive closure of another tree in ``names``."""
    closure = _closures(deps)
    return [t for t in names if not any(u != t and t in closure[u] for u in names)]


def process_graph(graph: EventGraph, e: PrimitiveEvent) -> list[CompositeEvent]:
    return graph.process(e)
