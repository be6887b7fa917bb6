"""Composite event detection over XML document mutations."""

from .document import Document
from .engine import Context, EventGraph, EventTree, EventTypeNode, Mode, OperatorNode, Opr
from .events import CompositeEvent, CompositeEventType, PrimitiveEvent, PrimitiveEventType
from .expr import parse_expression, parse_expressions
from .paths import PathInstance, PathType, parse_path_type

__all__ = [
    "CompositeEvent", "CompositeEventType", "Context", "Document", "EventGraph", "EventTree",
    "EventTypeNode", "Mode", "OperatorNode", "Opr", "PathInstance", "PathType", "PrimitiveEvent",
    "PrimitiveEventType", "parse_expression", "parse_expressions", "parse_path_type",
]
__version__ = "0.1.0"
