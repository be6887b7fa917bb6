"""A minimal mutable XML tree that emits a primitive event for every mutation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Union

from .condition import Condition, holds, parse_condition
from .events import Operation, PrimitiveEvent, PrimitiveEventType
from .paths import (Axis, Kind, PathInstance, PathType, Step, attribute, element,
                    pt_ends, pt_equal, text)


class DocumentError(ValueError):
    pass


class NodeKind(str, Enum):
    ELEMENT = "element"
    ATTRIBUTE = "attribute"
    TEXT = "text"


class Node:
    __slots__ = ("id", "kind", "name", "value", "parent", "children")

    def __init__(self, id: str, kind: NodeKind, name: Optional[str] = None,
                 value: Optional[str] = None, parent: Optional["Node"] = None):
        self.id = id
        self.kind = kind
        self.name = name
        self.value = value
        self.parent = parent
        self.children: list[Node] = []

    @property
    def step(self) -> Step:
        if self.kind is NodeKind.ATTRIBUTE:
            return attribute(self.name)
        if self.kind is NodeKind.TEXT:
            return text()
        return element(self.name)

    def text_value(self) -> str:
        """Attribute/text value, or the concatenated text children of an element."""
        if self.kind is not NodeKind.ELEMENT:
            return self.value or ""
        return "".join(c.value or "" for c in self.children if c.kind is NodeKind.TEXT)

    def __repr__(self) -> str:
        return f"Node({self.id!r}, {self.kind.value}, {self.name!r})"


# Mutation commands, as produced by the script parser.

@dataclass(frozen=True)
class InsertElement:
    parent: str
    name: str
    id: str


@dataclass(frozen=True)
class InsertAttribute:
    parent: str
    name: str
    id: str
    value: str


@dataclass(frozen=True)
class InsertText:
    parent: str
    id: str
    value: str


@dataclass(frozen=True)
class Update:
    node: str
    value: str


@dataclass(frozen=True)
class Delete:
    node: str


Mutation = Union[InsertElement, InsertAttribute, InsertText, Update, Delete]


class Document:
    """Element tree with an id index, a logical tick and an event-id counter.

    Primitive and composite events draw identifiers from the same counter so
    identifier order equals raise order.
    """

    def __init__(self, root_name: str, root_id: str):
        self.root = Node(root_id, NodeKind.ELEMENT, root_name)
        self.index: dict[str, Node] = {root_id: self.root}
        self.tick = 0
        self._ids = itertools.count(1)

    def next_event_id(self) -> int:
        return next(self._ids)

    def node(self, node_id: str) -> Node:
        try:
            return self.index[node_id]
        except KeyError:
            raise DocumentError(f"unknown node id {node_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.index

    def path_instance_of(self, node_id: str) -> PathInstance:
        chain = []
        node = self.node(node_id)
        while node is not None:
            chain.append(node)
            node = node.parent
        chain.reverse()
        pt = PathType(Kind.ABSOLUTE, tuple(n.step for n in chain))
        return PathInstance(pt, tuple(n.id for n in chain))

    def exists(self, pi: PathInstance) -> bool:
        """True iff ``pi`` still addresses a node along the same ancestor chain."""
        if pi.node not in self.index:
            return False
        return self.path_instance_of(pi.node).ids == pi.ids

    def nodes(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def apply(self, cmd: Mutation) -> PrimitiveEvent:
        if isinstance(cmd, (InsertElement, InsertAttribute, InsertText)):
            parent = self.node(cmd.parent)
            if parent.kind is not NodeKind.ELEMENT:
                raise DocumentError(f"cannot insert under {parent.kind.value} {parent.id!r}")
            if cmd.id in self.index:
                raise DocumentError(f"duplicate node id {cmd.id!r}")
            if isinstance(cmd, InsertElement):
                node = Node(cmd.id, NodeKind.ELEMENT, cmd.name, parent=parent)
            elif isinstance(cmd, InsertAttribute):
                if any(c.kind is NodeKind.ATTRIBUTE and c.name == cmd.name for c in parent.children):
                    raise DocumentError(f"{parent.id!r} already has attribute {cmd.name!r}")
                node = Node(cmd.id, NodeKind.ATTRIBUTE, cmd.name, cmd.value, parent)
            else:
                node = Node(cmd.id, NodeKind.TEXT, value=cmd.value, parent=parent)
            parent.children.append(node)
            self.index[node.id] = node
            return self._emit(Operation.INS, node.id)
        if isinstance(cmd, Update):
            node = self.node(cmd.node)
            if node.kind is NodeKind.ELEMENT:
                raise DocumentError(f"upd applies to text and attribute nodes, not {node.id!r}")
            node.value = cmd.value
            return self._emit(Operation.UPD, node.id)
        if isinstance(cmd, Delete):
            node = self.node(cmd.node)
            if node is self.root:
                raise DocumentError("the root element cannot be deleted")
            event = self._emit(Operation.DEL, node.id)
            node.parent.children.remove(node)
            for gone in _subtree(node):
                del self.index[gone.id]
            return event
        raise TypeError(f"not a mutation: {cmd!r}")

    def _emit(self, op: Operation, node_id: str) -> PrimitiveEvent:
        pi = self.path_instance_of(node_id)
        self.tick += 1
        return PrimitiveEvent(self.next_event_id(), self.tick, PrimitiveEventType(op, pi.pt), pi)

    def find_instances(self, suffix: PathType) -> list[PathInstance]:
        """Instances whose path type is ended by or equal to ``suffix``, in document order."""
        found = []
        for node in self.nodes():
            pi = self.path_instance_of(node.id)
            if pt_ends(suffix, pi.pt) or pt_equal(suffix, pi.pt):
                found.append(pi)
        return found

    def select(self, context: Node, path: PathType, self_rooted: bool = False) -> list[Node]:
        """Nodes addressed by relative ``path`` from ``context``.

        With ``self_rooted`` the subtree at ``context`` is treated as a
        document of its own, so the first step must match ``context`` itself.
        """
        steps = list(path.steps)
        current = [context]
        if self_rooted:
            if not _matches(context, steps[0]):
                return []
            steps = steps[1:]
        for step in steps:
            current = [c for n in current for c in n.children if _matches(c, step)]
        return current

    def eval_condition(self, at: PathInstance, cond: Union[Condition, str],
                       self_rooted: bool = False) -> bool:
        if isinstance(cond, str):
            cond = parse_condition(cond)
        if not self.exists(at):
            raise DocumentError(f"no node at {at}")
        context = self.node(at.node)
        if context.kind is not NodeKind.ELEMENT:
            raise DocumentError(f"conditions are evaluated at elements, not {at}")
        return holds(cond, lambda p: [n.text_value() for n in self.select(context, p, self_rooted)])


def _matches(node: Node, step: Step) -> bool:
    if step.axis is Axis.ATTRIBUTE:
        return node.kind is NodeKind.ATTRIBUTE and node.name == step.test
    if step.is_text:
        return node.kind is NodeKind.TEXT
    return node.kind is NodeKind.ELEMENT and node.name == step.test


def _subtree(node: Node) -> Iterator[Node]:
    yield node
    for c in node.children:
        yield from _subtree(c)


def eval_condition(doc: Document, at: PathInstance, cond: Union[Condition, str]) -> bool:
    return doc.eval_condition(at, cond)


def find_instances(doc: Document, suffix: PathType) -> list[PathInstance]:
    return doc.find_instances(suffix)
