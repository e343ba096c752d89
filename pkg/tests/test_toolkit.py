import pytest

from objlog import toolkit
from objlog.errors import LogicError
from objlog.reader import parse_term
from objlog.terms import Atom
from objlog.writer import term_text


def t(text):
    return parse_term(text)[0]


def test_display_appends_and_positions(rt):
    sol = rt.once("new(P, picture), send(P, display(box(100, 50), point(20, 20)))")
    pic = rt.kernel.fetch(sol["P"].ref)
    contents = pic.slots["contents"].elements
    assert len(contents) == 1
    assert toolkit.scene_dump(rt, pic) == (
        f"box@{contents[0].oid} pos=(20,20) fill=nil")


def test_redisplay_repositions_not_duplicates(rt):
    sol = rt.once("new(P, picture), new(B, box(10, 10)), "
                  "send(P, display(B, point(1, 1))), "
                  "send(P, display(B, point(9, 9)))")
    pic = rt.kernel.fetch(sol["P"].ref)
    assert len(pic.slots["contents"].elements) == 1
    box = pic.slots["contents"].elements[0]
    assert box.slots["position"].slots["x"] == 9


def test_display_without_point_defaults_to_origin(rt):
    sol = rt.once("new(P, picture), send(P, display(box(5, 5)))")
    pic = rt.kernel.fetch(sol["P"].ref)
    box = pic.slots["contents"].elements[0]
    assert box.slots["position"].slots["x"] == 0


def test_display_freed_graphical_is_error(rt):
    sol = rt.once("new(P, picture), new(B, box(1, 1)), free(B)")
    p, b = term_text(sol["P"]), term_text(sol["B"])
    with pytest.raises(LogicError):
        rt.once(f"send({p}, display({b}, point(0, 0)))")


def test_display_type_mismatch(rt):
    with pytest.raises(LogicError):
        rt.once("new(P, picture), send(P, display(colour(red), point(0, 0)))")


def test_area_normalise(rt):
    sol = rt.once("new(A, area(10, 10, -4, 5)), send(A, normalise), "
                  "get(A, x, X), get(A, w, W)")
    assert sol["X"] == 6 and sol["W"] == 4


# -- event pump -------------------------------------------------------------------


def fill_name(rt, ref):
    obj = rt.kernel.fetch(ref.ref)
    fill = obj.slots["fill_pattern"]
    return "nil" if fill is rt.kernel.nil else fill.slots["name"].name


def reference_fill_fold(events):
    state = "nil"
    for kind in events:
        if kind == "area_enter":
            state = "red"
        elif kind == "area_exit":
            state = "nil"
    return state


def test_pump_event_sequences_match_reference(rt, rng):
    rt.consult_program("my_box")
    ref = rt.once("new(B, my_box(10, 10))")["B"]
    kinds = ["area_enter", "area_exit", "button_down", "button_up", "keyboard"]
    history = []
    for _ in range(60):
        kind = rng.choice(kinds)
        history.append(kind)
        assert toolkit.pump_event(rt, ref, kind, 1, 2)
        assert fill_name(rt, ref) == reference_fill_fold(history)
    assert rt.audit_refcounts() == []


def test_pump_on_plain_box_changes_nothing(rt):
    ref = rt.once("new(B, box(10, 10))")["B"]
    before = {k: v for k, v in rt.kernel.fetch(ref.ref).slots.items()}
    assert toolkit.pump_event(rt, ref, "button_down", 3, 3)
    after = rt.kernel.fetch(ref.ref).slots
    assert before == after


def test_pump_unknown_kind(rt):
    ref = rt.once("new(B, box(1, 1))")["B"]
    with pytest.raises(LogicError):
        toolkit.pump_event(rt, ref, "earthquake")


def test_pump_event_builtin_from_logic(rt):
    rt.consult_program("my_box")
    sol = rt.once("new(B, my_box(10, 10)), pump_event(B, area_enter, 4, 4)")
    assert fill_name(rt, sol["B"]) == "red"


def test_events_are_transient(rt):
    ref = rt.once("new(B, box(2, 2))")["B"]
    before = rt.kernel.live_count_of("event")
    toolkit.pump_event(rt, ref, "keyboard")
    assert rt.kernel.live_count_of("event") == before


# -- button firing --------------------------------------------------------------------


def test_button_fires_message_on_button_down(rt):
    rt.consult_text(""":- dynamic(clicked/1).
    note_click(X) :- assertz(clicked(X)).""")
    sol = rt.once("new(B, button(hello, message(@prolog, call, note_click, yes)))")
    assert toolkit.pump_event(rt, sol["B"], "button_down", 0, 0)
    assert rt.once("clicked(yes)") is not None
    # other events do not fire it
    toolkit.pump_event(rt, sol["B"], "keyboard")
    assert [s for s in rt.query("clicked(X)")] == [{"X": Atom("yes")}]


def test_button_without_message(rt):
    sol = rt.once("new(B, button(plain))")
    assert toolkit.pump_event(rt, sol["B"], "button_down")


# -- trees -----------------------------------------------------------------------------


def spec_shape(term):
    # node(Name, Data, Sons) -> (name, [children...])
    name = term.args[0].name
    sons = []
    rest = term.args[2]
    while rest is not Atom("[]"):
        sons.append(spec_shape(rest.args[0]))
        rest = rest.args[1]
    return (name, sons)


def tree_shape(rt, obj):
    label = obj.slots["label"].slots["string"].name
    return (label, [tree_shape(rt, son) for son in obj.slots["sons"].elements])


def test_build_tree_isomorphic_to_spec(rt):
    rt.consult_program("my_node")
    spec = t("node(a, d(1), [node(b, d(2), []), node(c, d(3), [node(d, d(4), [])])])")
    root = toolkit.build_tree(rt, spec)
    assert root is not None
    assert tree_shape(rt, root) == spec_shape(spec)
    assert rt.store.records_live == 4
    rt.kernel.destroy(root)
    assert rt.store.records_live == 0
    assert rt.kernel.live_count == rt.baseline_live


def test_build_tree_leaf(rt):
    rt.consult_program("my_node")
    root = toolkit.build_tree(rt, t("node(a, d(0), [])"))
    assert root is not None
    assert rt.store.records_live == 1
    rt.kernel.destroy(root)
    assert rt.store.records_live == 0


def test_build_tree_atom_payload_needs_no_record(rt):
    # atoms are primitive: they live in the slot as themselves
    rt.consult_program("my_node")
    root = toolkit.build_tree(rt, t("node(a, d, [])"))
    assert root is not None
    assert rt.store.records_live == 0
    assert root.slots["data"] is Atom("d")
    rt.kernel.destroy(root)


def test_build_tree_malformed_spec_fails_atomically(rt):
    rt.consult_program("my_node")
    before = rt.kernel.live_count
    root = toolkit.build_tree(rt, t("not_a_node(1)"))
    assert root is None
    assert rt.kernel.live_count == before
    assert rt.store.records_live == 0
    # partially good tree with one bad child
    root = toolkit.build_tree(rt, t("node(a, d, [node(b, d, []), broken])"))
    assert root is None
    assert rt.kernel.live_count == before
    assert rt.store.records_live == 0
    assert rt.audit_refcounts() == []


def test_scene_dump_with_fill(rt):
    rt.consult_program("my_box")
    sol = rt.once("new(P, picture), new(B, my_box(10, 10)), "
                  "send(P, display(B, point(3, 4)))")
    toolkit.pump_event(rt, sol["B"], "area_enter")
    dump = toolkit.scene_dump(rt, sol["P"])
    oid = sol["B"].ref
    assert dump == f"my_box@{oid} pos=(3,4) fill=red"


def test_box_dimensions_must_be_non_negative(rt):
    with pytest.raises(LogicError):
        rt.once("new(_B, box(-5, 5))")
    with pytest.raises(LogicError):
        rt.once("new(B, box(5, 5)), send(B, width(-1))")
    sol = rt.once("new(B, box(5, 5)), send(B, width(9)), get(B, width, W)")
    assert sol["W"] == 9


def test_event_pump_queue_is_fifo(rt):
    rt.consult_program("my_box")
    ref = rt.once("new(B, my_box(10, 10))")["B"]
    pump = toolkit.EventPump(rt)
    pump.post(ref, "area_enter")
    pump.post(ref, "area_exit")
    pump.post(ref, "area_enter", 3, 3)
    assert fill_name(rt, ref) == "nil"  # nothing delivered yet
    assert pump.flush() == [True, True, True]
    assert fill_name(rt, ref) == "red"  # the last queued event won
    assert pump.queue == []
