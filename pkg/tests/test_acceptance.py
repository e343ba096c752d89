"""The acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import io
import random
import time

from objlog.bench import run_benchmarks
from objlog.reader import parse_term
from objlog.runtime import Runtime
from objlog.terms import Atom, Struct, Trail, Var, deref, is_variant, resolve_copy, unify
from objlog.writer import term_text

from oracles import oracle_resolve, oracle_unify, random_term
from scenarios import (
    expected_example_suite,
    expected_transcripts,
    run_event_scenario,
    run_example_suite,
    run_transcripts,
    run_tree_scenario,
)


def make_rt(**kw):
    return Runtime(out=io.StringIO(), **kw)


def t(text):
    return parse_term(text)[0]


# -- 1. paper-transcript suite -------------------------------------------------------


def test_acceptance_1_paper_transcripts():
    t0 = time.perf_counter()
    rt = make_rt()
    assert run_transcripts(rt) == expected_transcripts()
    assert run_event_scenario(rt) == __import__("scenarios").EVENT_EXPECTED
    assert run_tree_scenario(rt) == __import__("scenarios").TREE_EXPECTED
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"transcript suite took {elapsed:.2f}s"
    print(f"\nACCEPTANCE 1 PASS: paper transcripts reproduced in {elapsed:.2f}s")


# -- 2. class-compiler golden clause ---------------------------------------------------


GOLDEN = """
pce_principal:send_implementation('my_box->event', event(A), B) :-
    user:
    (   (   send(A, is_a(area_enter))
        ->  send(B, fill_pattern(colour(red)))
        ;   send(A, is_a(area_exit))
        ->  send(B, fill_pattern(@nil))
        ;   send_class(B, box, event(A))
        )
    ).
"""


def test_acceptance_2_class_compiler_golden():
    rt = make_rt()
    report = rt.consult_program("my_box")
    assert report.ok
    clauses = rt.engine.clauses_of("pce_principal", "send_implementation", 3)
    assert len(clauses) == 1
    head, body = clauses[0]
    expected = t(GOLDEN)
    exp_head = expected.args[0].args[1]
    exp_body = expected.args[1]
    got = Struct("clause", (head, body))
    want = Struct("clause", (exp_head, exp_body))
    assert is_variant(got, want), f"\ngot:  {term_text(got)}\nwant: {term_text(want)}"
    print("\nACCEPTANCE 2 PASS: emitted clause alpha-equivalent to the golden one")


# -- 3. host-data lifetime suite ----------------------------------------------------------


CELL = """
:- pce_begin_class(cell, object).
variable(data, prolog, both, "payload").
ignore(_O, _X:prolog) :-> true.
:- pce_end_class(cell).
"""


def test_acceptance_3_host_data_lifetimes():
    rt = make_rt()
    assert rt.consult_text(CELL).ok

    # (a) ignored prolog argument: zero records
    ref = term_text(rt.once("new(C, cell)")["C"])
    assert rt.call(f"send({ref}, ignore(f(g(x), Y)))")
    assert rt.stats()["records-live"] == 0

    # (b) stored: exactly one record, readable after frame closure
    assert rt.call(f"send({ref}, data(f(g(x), Y)))")
    assert rt.stats()["records-live"] == 1
    sol = rt.once(f"get({ref}, data, D)")
    assert is_variant(sol["D"], t("f(g(x), Y)"))

    # (c) owner freed: record destroyed
    assert rt.call(f"free({ref})")
    assert rt.stats()["records-live"] == 0

    # (d) 10,000 random store/free cycles end clean
    rng = random.Random(7)
    goal_store, vm1 = parse_term("new(C, cell), send(C, data(f(N, Z))), free(C)")
    goal_skip, vm2 = parse_term("new(C, cell), send(C, ignore(g(N))), free(C)")
    for i in range(10_000):
        if rng.random() < 0.5:
            goal, vm = goal_store, vm1
        else:
            goal, vm = goal_skip, vm2
        trail = rt.engine.trail
        mark = trail.mark()
        assert rt.engine.solve_once(goal)
        trail.undo_to(mark)
        for v in vm.values():
            if type(v) is Var:
                v.ref = None
    stats = rt.stats()
    assert stats["records-live"] == 0
    assert stats["wrappers-live"] == 0
    assert rt.kernel.live_count == rt.baseline_live
    print("\nACCEPTANCE 3 PASS: host-data lifetime suite "
          f"(recorded {stats['wrappers-recorded-total']} wrappers total, all reclaimed)")


# -- 4. by-reference binding ------------------------------------------------------------


POKER = """
:- pce_begin_class(poker, object).
poke(_O, T:prolog) :-> probe(T).
:- pce_end_class(poker).
"""


def _embed(term, rng, payload):
    """A copy of the term with one random position replaced by the payload."""
    positions = []

    def walk(x, path):
        x = deref(x)
        positions.append(path)
        if type(x) is Struct:
            for i, a in enumerate(x.args):
                walk(a, path + (i,))

    walk(term, ())
    target = rng.choice(positions)

    def rebuild(x, path):
        if path == target:
            return payload
        x = deref(x)
        if type(x) is Struct:
            return Struct(x.name, tuple(rebuild(a, path + (i,))
                                        for i, a in enumerate(x.args)))
        return x

    return rebuild(term, ())


def test_acceptance_4_by_reference_binding():
    rt = make_rt()
    assert rt.consult_text(POKER).ok
    assert rt.consult_text(":- dynamic(probe/1).").ok
    ref = term_text(rt.once("new(P, poker)")["P"])
    rng = random.Random(11)
    for case in range(200):
        base = random_term(rng, max_nodes=9, vars_pool=[Var("A"), Var("B")])
        hole = Var("Hole")
        marker = Atom(f"marker_{case}")
        shape = _embed(base, rng, hole)
        fact = Struct("probe", (_embed_same(shape, hole, marker),))
        rt.engine.retract_all_clauses("user", "probe", 1)
        rt.engine.assert_term(resolve_copy(fact))

        goal = Struct(";", (Struct("send", (t(ref), Struct("poke", (shape,)))),
                            Atom("true")))
        solutions = 0
        for _ in rt.engine.solve(goal):
            solutions += 1
            if solutions == 1:
                # the callee's binding is visible to the caller
                assert deref(hole) is marker, f"case {case}"
            else:
                # and undone on backtracking
                assert deref(hole) is hole, f"case {case}"
        assert solutions == 2
    print("\nACCEPTANCE 4 PASS: by-reference bindings visible and undone, 200 shapes")


def _embed_same(shape, hole, marker):
    def rebuild(x):
        x = deref(x)
        if x is hole:
            return marker
        if type(x) is Struct:
            return Struct(x.name, tuple(rebuild(a) for a in x.args))
        return x

    return rebuild(shape)


# -- 5. refcount audit ----------------------------------------------------------------------


def test_acceptance_5_refcount_audit():
    scenarios = (run_transcripts, run_event_scenario, run_tree_scenario)
    rt = make_rt()
    for scenario in scenarios:
        scenario(rt)
        assert rt.audit_refcounts() == [], scenario.__name__
        assert rt.kernel.unreachable_cycles(rt.hostdata.transient_holds()) == []
    print("\nACCEPTANCE 5 PASS: full-heap sweep matches stored refcounts "
          f"after {len(scenarios)} scenarios")


# -- 6. nondeterministic dispatch -------------------------------------------------------------


def test_acceptance_6_nondet_dispatch():
    for k in (0, 1, 2, 5):
        rt = make_rt()
        choices = "\n".join(f"choice_item(v{i})." for i in range(k))
        rt.consult_text(f"""
        :- dynamic(choice_item/1).
        {choices}
        :- pce_begin_class(chooser, object).
        :- pce_pure_prolog(pick_many).
        pick_many(_O, X:prolog) :-> choice_item(X).
        pick_once(_O, X:prolog) :-> choice_item(X).
        :- pce_end_class(chooser).
        """)
        ref = term_text(rt.once("new(C, chooser)")["C"])
        many = list(rt.query(f"send({ref}, pick_many(X))"))
        once_ = list(rt.query(f"send({ref}, pick_once(X))"))
        assert len(many) == k, f"k={k}: nondet gave {len(many)}"
        assert len(once_) == (1 if k > 0 else 0), f"k={k}: classic gave {len(once_)}"
    print("\nACCEPTANCE 6 PASS: pure-logic sends enumerate k solutions, "
          "classic sends prune to at most one (k in {0,1,2,5})")


# -- 7. engine properties -----------------------------------------------------------------------


def test_acceptance_7_engine_properties():
    rng = random.Random(99)
    mismatches = 0
    for _ in range(10_000):
        a = random_term(rng, max_nodes=12)
        b = random_term(rng, max_nodes=12)
        trail = Trail()
        ours = unify(a, b, trail)
        subst = oracle_unify(a, b)
        if ours != (subst is not None):
            mismatches += 1
        elif ours and not is_variant(resolve_copy(a), oracle_resolve(a, subst)):
            mismatches += 1
        trail.undo_to(0)
    assert mismatches == 0

    rt = make_rt()
    rt.consult_text("loop(0).\nloop(N) :- N > 0, N1 is N - 1, loop(N1).")
    peaks = []
    for n in (1_000, 1_000_000):
        q = rt.engine.solve(t(f"loop({n})"))
        assert sum(1 for _ in q) == 1
        peaks.append(q.machine.peak_depth)
    assert peaks[0] == peaks[1], f"frame depth grew: {peaks}"
    print("\nACCEPTANCE 7 PASS: 10,000 unifications match the oracle; "
          f"LCO depth constant at {peaks[1]} over 10^6 iterations")


# -- 8. performance ratios ---------------------------------------------------------------------


def test_acceptance_8_performance():
    t0 = time.perf_counter()
    rt = make_rt()
    report = run_benchmarks(rt, iterations=20_000, batches=5)
    elapsed = time.perf_counter() - t0
    us = report.per_call_us
    assert us["normalise"] < us["noarg"], us
    assert us["intarg"] >= us["noarg"], us
    assert us["termarg"] >= us["intarg"], us
    ratio = report.ratio("noarg", "normalise")
    assert 1.0 <= ratio <= 8.0, f"noarg/normalise ratio {ratio:.2f}"
    assert elapsed < 60.0, f"harness took {elapsed:.1f}s"
    print(f"\nACCEPTANCE 8 PASS: ratios hold (noarg/normalise = {ratio:.2f}), "
          f"harness finished in {elapsed:.1f}s")
    print(report.table())


# -- 9. JIT equivalence -------------------------------------------------------------------------


def test_acceptance_9_jit_equivalence():
    lazy = run_example_suite(make_rt(), eager=False)
    eager = run_example_suite(make_rt(), eager=True)
    assert lazy == eager == expected_example_suite()
    print("\nACCEPTANCE 9 PASS: eager and lazy class realization behave identically")
