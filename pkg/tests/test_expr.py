from __future__ import annotations

import math

import pytest

from xmlevt.condition import Compare
from xmlevt.engine import Context, EventTypeNode, Mode, OperatorNode, derive_path_types
from xmlevt.events import STAR, CompositeEventType, Operation
from xmlevt.expr import ExprSyntaxError, parse_expression, parse_expressions


def shape(node):
    if isinstance(node, EventTypeNode):
        return node.label
    return (node.opr.value, *[shape(c) for c in node.children])


class TestGrammar:
    def test_precedence(self):
        tree = parse_expression("def T := ins(a/b) or ins(a/c) and ins(a/d) seq ins(a/e) ;")
        assert shape(tree.root) == ("or", "ins(a/b)", ("and", "ins(a/c)", ("seq", "ins(a/d)", "ins(a/e)")))

    def test_seq_is_left_associative(self):
        tree = parse_expression("def T := ins(a/b) seq ins(a/c) seq ins(a/d) ;")
        assert shape(tree.root) == ("seq", ("seq", "ins(a/b)", "ins(a/c)"), "ins(a/d)")

    def test_chains_are_n_ary_and_parentheses_nest(self):
        tree = parse_expression("def T := ins(a/b) and ins(a/c) and (ins(a/d) and ins(a/e)) ;")
        assert shape(tree.root) == ("and", "ins(a/b)", "ins(a/c)", ("and", "ins(a/d)", "ins(a/e)"))

    def test_mult_bounds(self):
        tree = derive_path_types(parse_expression("def T := mult[2,inf] upd(item/quantity/text()) ;"))
        assert (tree.root.lower, tree.root.upper) == (2, math.inf)
        assert str(tree.et) == "T(item/quantity)"

    def test_leaf_kinds(self):
        tree = parse_expression("def T := del(a/b) or *(a/c) or Nm(a/d) or ref *(a/e) or ref X(a/f) ;")
        ets = [c.et for c in tree.root.children]
        assert [e.op for e in ets[:2]] == [Operation.DEL, Operation.STAR]
        assert ets[2:] == [CompositeEventType("Nm", ets[2].pt), CompositeEventType(STAR, ets[3].pt),
                           CompositeEventType("X", ets[4].pt)]

    def test_comments_and_several_definitions(self):
        defs = parse_expressions("# first\ndef A := ins(a/b) or ins(a/c) ;\n# second\n"
                                 "def B(a) := A(a) and del(a) ;")
        assert [d.name for d in defs] == ["A", "B"] and str(derive_path_types(defs[1].tree).et) == "B(a)"

    def test_declared_pt(self):
        tree = derive_path_types(parse_expression("def T(/order) := ins(/order/item) or ins(/order/billTo) ;"))
        assert str(tree.et.pt) == "/order"


class TestOptions:
    def test_defaults(self):
        root = parse_expression("def T := ins(a/b) and ins(a/c) ;").root
        assert (root.context, root.hierarchical, root.mode) == (Context.CHRONICLE, True, Mode.EARLIEST)

    def test_definition_options_are_defaults_for_every_operator(self):
        tree = parse_expression("def T {context=recent, hier=off} := ins(a) seq (ins(a/b) and ins(a/c)) ;")
        assert all(n.context is Context.RECENT and not n.hierarchical for n in tree.operators)

    def test_operator_options_override(self):
        tree = parse_expression('def T {mode=nonlocal} := ins(a) seq '
                                '(ins(a/b) and ins(a/c)) {mode=earliest, name=Inner, cond="b > 1"} ;')
        inner, root = tree.operators
        assert inner.name == "Inner" and inner.mode is Mode.EARLIEST and root.mode is Mode.NONLOCAL
        assert isinstance(inner.cond, Compare)

    def test_caller_defaults_lose_to_file(self):
        d, = parse_expressions("def T {context=cumulative} := ins(a/b) and ins(a/c) ;",
                               context=Context.RECENT, hierarchical=False)
        assert d.tree.root.context is Context.CUMULATIVE and not d.tree.root.hierarchical

    def test_mult_options_and_pt(self):
        tree = parse_expression("def T := mult[0,1] ins(item) {pt=order, context=recent} ;")
        assert str(tree.root.explicit_pt) == "order" and tree.root.context is Context.RECENT

    def test_definition_cond_on_root(self):
        root = parse_expression('def T {cond="a/b = \\"x\\""} := ins(a/b) or ins(a/c) ;').root
        assert root.cond == Compare(root.cond.path, "=", "x")


@pytest.mark.parametrize("text, line, col", [
    ("def T := ins(a/b) or ins(a/c)", 1, 30),
    ("def T :=\n  ins(a/b) xor ins(a/c) ;", 2, 12),
    ("def T := ins(a//b) or ins(a/c) ;", 1, 16),
    ("def T {color=red} := ins(a/b) or ins(a/c) ;", 1, 8),
    ("def T {context=sometimes} := ins(a/b) or ins(a/c) ;", 1, 16),
    ("def T := ins(a/b) ;", 1, 10),
    ("def T {name=X} := ins(a/b) or ins(a/c) ;", 1, 7),
    ("def T := mult[x,2] ins(a/b) ;", 1, 15),
    ('def T {cond="a >"} := ins(a/b) or ins(a/c) ;', 1, 13),
    ("def and := ins(a/b) or ins(a/c) ;", 1, 5),
    ("def T := ins(a/b) {mode=custom} or ins(a/c) ;", 1, 19),
])
def test_errors_report_position(text, line, col):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expressions(text, "t.expr")
    assert (info.value.line, info.value.col) == (line, col)
    assert str(info.value).startswith(f"t.expr:{line}:{col}: ")


def test_parse_expression_needs_exactly_one():
    with pytest.raises(ValueError):
        parse_expression("")


def test_operator_nodes_are_fresh_per_parse():
    text = "def T := ins(a/b) and ins(a/c) ;"
    a, b = parse_expression(text), parse_expression(text)
    assert isinstance(a.root, OperatorNode) and a.root is not b.root
