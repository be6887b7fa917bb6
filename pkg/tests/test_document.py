from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from xmlevt.condition import And, Compare, ConditionSyntaxError, Exists, Not, Or, parse_condition
from xmlevt.document import (Delete, Document, DocumentError, InsertAttribute, InsertElement,
                             InsertText, Update, find_instances)
from xmlevt.events import Operation
from xmlevt.paths import parse_path_type, pi_project

P = parse_path_type


@pytest.fixture
def order():
    doc = Document("order", "o1")
    doc.apply(InsertElement("o1", "item", "i1"))
    doc.apply(InsertElement("i1", "price", "p1"))
    doc.apply(InsertText("p1", "t1", "12"))
    doc.apply(InsertElement("i1", "quantity", "q1"))
    doc.apply(InsertText("q1", "t2", "2"))
    return doc


class TestApply:
    def test_insert_element(self):
        doc = Document("order", "o1")
        e = doc.apply(InsertElement("o1", "item", "i1"))
        assert e.et.op is Operation.INS and str(e.et.pt) == "/order/item" and str(e.pi) == "/o1/i1"
        assert e.ts == doc.tick == 1

    def test_update_text(self, order):
        e = order.apply(Update("t1", "13"))
        assert str(e.et) == "upd(/order/item/price/text())" and e.pi.node == "t1"
        assert order.node("t1").value == "13"

    def test_attribute(self, order):
        e = order.apply(InsertAttribute("i1", "partnum", "a1", "926-AA"))
        assert str(e.et.pt) == "/order/item/@partnum"
        with pytest.raises(DocumentError):
            order.apply(InsertAttribute("i1", "partnum", "a2", "x"))

    def test_delete_single_event_and_subtree_removed(self, order):
        e = order.apply(Delete("i1"))
        assert str(e).startswith("prim del(/order/item) at /o1/i1")
        assert "p1" not in order and "t2" not in order

    @pytest.mark.parametrize("cmd", [InsertElement("nope", "x", "x1"), InsertElement("o1", "item", "i1"),
                                     Update("i1", "v"), Delete("o1"), InsertElement("t1", "x", "x1")])
    def test_errors(self, order, cmd):
        with pytest.raises(DocumentError):
            order.apply(cmd)

    def test_path_instance_of(self, order):
        pi = order.path_instance_of("p1")
        assert str(pi) == "/o1/i1/p1" and str(pi.pt) == "/order/item/price"
        assert str(order.path_instance_of("o1")) == "/o1"
        with pytest.raises(DocumentError):
            order.path_instance_of("gone")


class TestConditions:
    def test_example_64_from_order(self, order):
        pi = order.path_instance_of("o1")
        assert order.eval_condition(pi, "item/price ≥ 0 ∧ item/quantity > 0")

    def test_missing_quantity(self, order):
        order.apply(Delete("q1"))
        assert not order.eval_condition(order.path_instance_of("o1"), "item/price >= 0 and item/quantity > 0")

    def test_negated_existence(self, order):
        assert order.eval_condition(order.path_instance_of("i1"), "¬(comment)")
        assert not order.eval_condition(order.path_instance_of("i1"), "not price")

    def test_self_rooted(self, order):
        at = order.path_instance_of("i1")
        assert order.eval_condition(at, "item/price >= 0", self_rooted=True)
        assert not order.eval_condition(at, "item/price >= 0")

    def test_text_concatenation(self, order):
        order.apply(InsertText("p1", "t3", "5"))
        assert order.eval_condition(order.path_instance_of("i1"), "price = 125")

    def test_non_numeric_is_false(self, order):
        order.apply(Update("t1", "abc"))
        at = order.path_instance_of("i1")
        assert not order.eval_condition(at, "price >= 0")
        assert order.eval_condition(at, 'price = "abc"')

    def test_attribute_value(self, order):
        order.apply(InsertAttribute("i1", "partnum", "a1", "926-AA"))
        assert order.eval_condition(order.path_instance_of("o1"), "item/@partnum != '1'")

    def test_at_missing_node(self, order):
        pi = order.path_instance_of("q1")
        order.apply(Delete("q1"))
        with pytest.raises(DocumentError):
            order.eval_condition(pi, "x")


class TestConditionParser:
    def test_structure(self):
        c = parse_condition("a > 1 and (b or not c = 'x')")
        assert c == And((Compare(P("a"), ">", 1.0),
                         Or((Exists(P("b")), Not(Compare(P("c"), "=", "x"))))))

    @pytest.mark.parametrize("text", ["", "a >", "/abs", "a and", "(a", "a ? 1", "a = b"])
    def test_errors(self, text):
        with pytest.raises(ConditionSyntaxError):
            parse_condition(text)


def test_find_instances(order):
    order.apply(InsertElement("o1", "item", "i2"))
    assert [str(p) for p in find_instances(order, P("/order/item"))] == ["/o1/i1", "/o1/i2"]
    assert [str(p) for p in find_instances(order, P("item"))] == ["/o1/i1", "/o1/i2"]
    assert find_instances(Document("order", "o1"), P("item")) == []


def test_find_instances_matches_full_scan(order):
    order.apply(InsertElement("q1", "item", "deep"))
    found = {p.node for p in find_instances(order, P("item"))}
    scan = {n.id for n in order.nodes() if n.name == "item"}
    assert found == scan == {"i1", "deep"}


@given(st.lists(st.sampled_from(["item", "price", "quantity"]), min_size=1, max_size=15))
def test_insert_then_delete_restores_index(names):
    doc = Document("order", "o1")
    before = set(doc.index)
    ticks = []
    for k, name in enumerate(names):
        parent = "o1" if k == 0 else f"n{k - 1}"
        e = doc.apply(InsertElement(parent, name, f"n{k}"))
        ticks.append(e.ts)
        assert pi_project(e.et.pt, e.pi) == e.pi and e.et.pt.absolute
    doc.apply(Delete("n0"))
    assert set(doc.index) == before
    assert ticks == list(range(1, len(names) + 1)) and doc.tick == len(names) + 1
