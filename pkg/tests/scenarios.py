"""The worked-example suite driven through the scripted REPL.

Each scenario is (input lines, expected output) with object ids normalized
to `@N` before comparison; everything else must match exactly.
"""

from __future__ import annotations

import re

from objlog import toolkit
from objlog.cli import Session
from objlog.runtime import Runtime


def normalize_ids(text: str) -> str:
    return re.sub(r"@\d+", "@N", text)


TRANSCRIPTS = [
    # object creation: a box with given width and height
    (
        ["new(X, box(100,100))."],
        "X = @N",
    ),
    # creating a window and displaying a box at a location
    (
        ["new(P, picture),",
         "send(P, display(box(100,50), point(20,20)))."],
        "P = @N",
    ),
    # asking for the left edge of the visible part of a window
    (
        ["new(P, picture),",
         "get(P, visible, Visible),",
         "get(Visible, x, X)."],
        "P = @N\nVisible = @N\nX = 0",
    ),
    # destroying an object, after which it can no longer be used
    (
        ["new(X, box(20,20)), free(X), catch(send(X, width(1)), E, true)."],
        "X = @N\nE = bridge_error(freed_object, context(@N, width))",
    ),
    # calling logic code as a method of the well-known proxy object
    (
        ["send(@prolog, writeln('Hello World'))."],
        "Hello World\ntrue.",
    ),
    # a push button holding a message that calls a predicate
    (
        ["new(B, button(hello,",
         "               message(@prolog, call,",
         "                       writeln, 'Hello World')))."],
        "B = @N",
    ),
]


def run_transcripts(rt: Runtime) -> str:
    """Feed every transcript; returns the normalized combined output."""
    session = Session(rt)
    chunks = []
    for lines, _expected in TRANSCRIPTS:
        for line in lines:
            got = session.feed(line)
            side = rt.out.getvalue()
            rt.out.seek(0)
            rt.out.truncate(0)
            text = (side + got) if side else got
            if text:
                chunks.append(text)
    return normalize_ids("\n".join(chunks))


def expected_transcripts() -> str:
    return normalize_ids("\n".join(expected for _lines, expected in TRANSCRIPTS))


def run_event_scenario(rt: Runtime, eager: bool = False) -> str:
    """The class-refinement example: a box turning red when entered."""
    report = rt.consult_program("my_box")
    assert report.ok, report.errors
    if eager:
        rt.realize_all()
    sol = rt.once("new(B, my_box(100, 100))")
    ref = sol["B"]
    out = []
    for kind in ("area_enter", "area_exit", "button_down", "area_enter"):
        toolkit.pump_event(rt, ref, kind, 1, 1)
        obj = rt.kernel.fetch(ref.ref)
        fill = obj.slots["fill_pattern"]
        name = "nil" if fill is rt.kernel.nil else fill.slots["name"].name
        out.append(f"{kind} -> fill={name}")
    return "\n".join(out)


EVENT_EXPECTED = """area_enter -> fill=red
area_exit -> fill=nil
button_down -> fill=nil
area_enter -> fill=red"""


def run_tree_scenario(rt: Runtime, eager: bool = False) -> str:
    """The permanent-payload example: a tree with term data per node."""
    report = rt.consult_program("my_node")
    assert report.ok, report.errors
    if eager:
        rt.realize_all()
    from objlog.reader import parse_term

    spec, _ = parse_term("node(a, d(1), [node(b, d(2), []), node(c, d(3), [])])")
    root = toolkit.build_tree(rt, spec)
    assert root is not None
    stats = rt.stats()
    sol = rt.once(f"get(@{root.oid}, data, D)")
    from objlog.writer import term_text

    lines = [
        f"nodes={rt.kernel.live_count_of('my_node')}",
        f"records={stats['records-live']}",
        f"root_data={term_text(sol['D'])}",
    ]
    rt.kernel.destroy(root)
    lines.append(f"records_after_free={rt.stats()['records-live']}")
    return "\n".join(lines)


TREE_EXPECTED = """nodes=3
records=3
root_data=d(1)
records_after_free=0"""


def run_example_suite(rt: Runtime, eager: bool = False) -> str:
    """Everything above in sequence; the full worked-example suite."""
    parts = [run_transcripts(rt), run_event_scenario(rt, eager),
             run_tree_scenario(rt, eager)]
    return "\n---\n".join(parts)


def expected_example_suite() -> str:
    return "\n---\n".join([
        expected_transcripts(), EVENT_EXPECTED, TREE_EXPECTED])
