from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from oracles import INSERT_ITEM, SEQUENCES_CONTEXTS, TABLE_CONTEXTS, expected_contexts
from xmlevt.cli import main

DATA = Path(__file__).parent / "data"


def script_for(labels: str) -> str:
    lines = ["root order o1"]
    for label in labels.split():
        kind = {"i": "item", "p": "price", "q": "quantity"}[label[0]]
        parent = "/o1" if kind == "item" else f"/o1/i{label[1:]}"
        lines.append(f"ins {parent} {kind} {label}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def run(tmp_path, capsys):
    def go(expr: str, script: str, *flags: str):
        e, s = tmp_path / "t.expr", tmp_path / "t.script"
        e.write_text(expr)
        s.write_text(script)
        code = main(["replay", str(e), str(s), *flags])
        out, err = capsys.readouterr()
        return code, out.splitlines(), err
    return go


def test_insert_item_raises_once(run):
    code, out, err = run(INSERT_ITEM, script_for("i1 p1 q1"))
    assert code == 0 and err == ""
    raises = [x for x in out if x.startswith("raise")]
    assert raises == ["raise InsertItem(/order/item) at /o1/i1 id=5 cevts=[1,4] t=3"]


def test_recent_row_through_flags(run):
    code, out, _ = run(INSERT_ITEM, script_for(SEQUENCES_CONTEXTS["S3"]), "--json", "--inner",
                       "--context", "recent", "--hier", "off")
    assert code == 0
    records = [json.loads(x) for x in out]
    by_id = {r["id"]: r for r in records}

    def leaves(r):
        if r["kind"] == "prim":
            return {r["pi"].rsplit("/", 1)[1]}
        return set().union(*(leaves(by_id[i]) for i in r["cevts"]))

    got: dict[int, list] = {}
    for r in records:
        if r["kind"] == "raise" and r["type"] == "InsertItem":
            got.setdefault(r["t"], []).append((frozenset(leaves(r)), False))
    assert got == expected_contexts("recent", "S3")
    assert TABLE_CONTEXTS["recent"]["S3"][4] == ["i2 p1 q1"]


def test_empty_script(run):
    code, out, _ = run(INSERT_ITEM, "")
    assert (code, out) == (0, [])


def test_quiet_prints_only_raises(run):
    code, out, _ = run(INSERT_ITEM, script_for("i1 p1 q1 i2"), "--quiet")
    assert code == 0 and len(out) == 1 and out[0].startswith("raise InsertItem")


def test_inner_raises(tmp_path, capsys):
    assert main(["replay", str(DATA / "item.expr"), str(DATA / "s8.script"), "--quiet", "--inner"]) == 0
    types = [line.split()[1].split("(")[0] for line in capsys.readouterr().out.splitlines()]
    assert types == ["c", "c", "c", "q", "h", "i", "c"]


@pytest.mark.parametrize("expr, script, code, message", [
    ("def T := ins(a/b) or ;", "", 2, "t.expr:1:"),
    (INSERT_ITEM, "root order o1\nins /o1\n", 2, "t.script:2:"),
    (INSERT_ITEM, "root order o1\nins /o1/zz price p1\n", 3, "t.script:2:"),
    ("def T := mult[0,1] ins(item) ;", "", 3, "T"),
    ("def T := ins(a/b) or ins(a/c) ; def T := ins(a/b) or ins(a/c) ;", "", 3, "T"),
    (INSERT_ITEM, "root order o1\nclose\nins /o1 item i1\n", 3, "t.script:3:"),
])
def test_error_exit_codes(run, expr, script, code, message):
    got, out, err = run(expr, script)
    assert got == code and err.startswith("xml-evt: ") and message in err


def test_missing_file(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "none.expr"), str(tmp_path / "none.script")]) == 2
    assert "xml-evt:" in capsys.readouterr().err


def test_order_command(capsys):
    assert main(["order", str(DATA / "ex43.trace")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "e12 < e22 (causal)"


@pytest.mark.parametrize("trace, code", [("frobnicate\n", 2), ("loc a tsl=1\nevt x at b\n", 3)])
def test_order_errors(tmp_path, capsys, trace, code):
    f = tmp_path / "t.trace"
    f.write_text(trace)
    assert main(["order", str(f)]) == code


def test_console_output_is_stable():
    cmd = [sys.executable, "-m", "xmlevt.cli", "replay", str(DATA / "item.expr"), str(DATA / "s8.script")]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second and first.endswith(b"\n")
