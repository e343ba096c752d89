"""Clause database and the resolution machine.

The solver is a tree-walking SLD machine with an explicit goal continuation
and choice-point stack, so deterministic tail calls run in constant frame
depth and deep conjunctions never touch the Python stack.  Cut is handled
through per-call barriers, if-then-else through a commit entry on the
continuation, and nondeterministic native predicates through generator
choice points.

Two namespaces exist, `user` and `pce_principal`; a goal `M:G` resolves G
in namespace M and nothing more.  Clause lists are copy-on-write so running
queries keep the view they started with, and first-argument indexing is a
pure optimization that can be disabled for testing.
"""

from __future__ import annotations

import sys
from typing import Callable, Optional

from .balls import (
    domain_error,
    instantiation_error,
    permission_error,
    type_error,
    unknown_procedure,
)
from .errors import LogicError, ReaderError
from .reader import read_terms
from .terms import (
    FAIL,
    TRUE,
    Atom,
    Struct,
    Term,
    Trail,
    Var,
    deref,
    rename_term,
    resolve_copy,
    unify,
)

NAMESPACES = ("user", "pce_principal")


class PushGoal:
    """Returned by a builtin to continue with a goal in the current machine.

    The pushed goal gets a fresh cut barrier, so a cut inside it stays local.
    """

    __slots__ = ("term", "ns")

    def __init__(self, term: Term, ns: str = "user"):
        self.term = term
        self.ns = ns


class _Slot:
    """A variable position in a compiled clause skeleton."""

    __slots__ = ("i",)

    def __init__(self, i: int):
        self.i = i


class _SkelStruct:
    """A compound skeleton node containing at least one variable slot."""

    __slots__ = ("name", "args")

    def __init__(self, name, args):
        self.name = name
        self.args = args


def _compile_skel(t: Term, slots: dict, depths: dict):
    """Compile a term into a skeleton: ground subterms are kept as-is,
    variables become slots, and only the variable-carrying spine is rebuilt."""
    root = [None]
    stack = [("c", t, root, 0)]
    while stack:
        op, a, dest, di = stack.pop()
        if op == "f":
            orig, args = a
            if any(x is not o for x, o in zip(args, orig.args)):
                node = _SkelStruct(orig.name, tuple(args))
                depths[id(node)] = 1 + max(depths.get(id(x), 0) for x in args)
                dest[di] = node
            else:
                dest[di] = orig
            continue
        a = deref(a)
        ta = type(a)
        if ta is Var:
            s = slots.get(id(a))
            if s is None:
                s = _Slot(len(slots))
                slots[id(a)] = s
                depths[id(s)] = 1
            dest[di] = s
        elif ta is Struct:
            args = list(a.args)
            stack.append(("f", (a, args), dest, di))
            for i, sub in enumerate(a.args):
                stack.append(("c", sub, args, i))
        else:
            dest[di] = a
    return root[0]


def _compile_builder(skel):
    """Turn a skeleton into a closure `vs -> term` instantiating it."""
    c = skel.__class__
    if c is _Slot:
        i = skel.i

        def slot(vs):
            return vs[i]

        return slot
    if c is not _SkelStruct:
        def ground(vs):
            return skel

        return ground
    name = skel.name
    builders = tuple(_compile_builder(a) for a in skel.args)
    n = len(builders)
    if n == 1:
        b0 = builders[0]

        def mk1(vs):
            s = Struct.__new__(Struct)
            s.name = name
            s.args = (b0(vs),)
            return s

        return mk1
    if n == 2:
        b0, b1 = builders

        def mk2(vs):
            s = Struct.__new__(Struct)
            s.name = name
            s.args = (b0(vs), b1(vs))
            return s

        return mk2

    def mkn(vs):
        s = Struct.__new__(Struct)
        s.name = name
        s.args = tuple(b(vs) for b in builders)
        return s

    return mkn


# Above this skeleton depth clause compilation falls back to the iterative
# copier so pathological asserted terms cannot blow the Python stack.
_DEEP_SKEL = 400

_TRUE_BODY = None


class Clause:
    __slots__ = ("head", "body", "key", "nvars", "deep", "head_arg_builders", "body_builder")

    def __init__(self, head: Term, body: Term):
        self.head = head
        self.body = body
        if type(head) is Struct:
            self.key = index_key(head.args[0])
        else:
            self.key = None
        slots: dict = {}
        depths: dict = {}
        head_skel = _compile_skel(head, slots, depths)
        body_skel = _compile_skel(body, slots, depths)
        self.nvars = len(slots)
        self.deep = max(depths.values(), default=0) > _DEEP_SKEL
        if self.deep:
            self.head_arg_builders = ()
            self.body_builder = _TRUE_BODY
            return
        if type(head_skel) in (_SkelStruct, Struct):
            self.head_arg_builders = tuple(_compile_builder(a) for a in head_skel.args)
        else:
            self.head_arg_builders = ()
        if body is TRUE:
            self.body_builder = _TRUE_BODY
        else:
            self.body_builder = _compile_builder(body_skel)


def index_key(t: Term):
    """First-argument index key; None matches everything (variables)."""
    t = deref(t)
    ty = type(t)
    if ty is Var:
        return None
    if ty is Atom:
        return ("a", t.name)
    if ty is int:
        return ("i", t)
    if ty is float:
        return ("f", t)
    if ty is Struct:
        return ("s", t.name, len(t.args))
    return ("o", t.ref)


class PredicateEntry:
    __slots__ = ("ns", "name", "arity", "clauses", "dynamic", "_buckets", "_varonly", "_dirty")

    def __init__(self, ns: str, name: str, arity: int):
        self.ns = ns
        self.name = name
        self.arity = arity
        self.clauses: tuple = ()
        self.dynamic = False
        self._buckets: dict = {}
        self._varonly: tuple = ()
        self._dirty = False

    def add(self, clause: Clause, front: bool = False) -> None:
        if front:
            self.clauses = (clause,) + self.clauses
        else:
            self.clauses = self.clauses + (clause,)
        self._dirty = True

    def remove(self, clause: Clause) -> None:
        self.clauses = tuple(c for c in self.clauses if c is not clause)
        self._dirty = True

    def _build_index(self) -> None:
        buckets: dict = {}
        for c in self.clauses:
            if c.key is not None:
                buckets.setdefault(c.key, None)
        for key in buckets:
            buckets[key] = tuple(c for c in self.clauses if c.key is None or c.key == key)
        self._buckets = buckets
        self._varonly = tuple(c for c in self.clauses if c.key is None)
        self._dirty = False

    def select(self, goal: Term, indexing: bool) -> tuple:
        clauses = self.clauses
        if not indexing or self.arity == 0 or len(clauses) < 2:
            return clauses
        key = index_key(goal.args[0])
        if key is None:
            return clauses
        if self._dirty:
            self._build_index()
        got = self._buckets.get(key)
        return got if got is not None else self._varonly


class LoadReport:
    def __init__(self, origin: str):
        self.origin = origin
        self.clauses = 0
        self.directives = 0
        self.errors: list = []
        self.warnings: list = []

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        msg = f"{self.origin}: {self.clauses} clauses, {self.directives} directives"
        if self.errors:
            msg += f", {len(self.errors)} errors"
        return msg


# -- choice points ---------------------------------------------------------


class _ClauseCP:
    __slots__ = ("goal", "ns", "clauses", "i", "cont", "depth", "mark", "bodybar")

    def __init__(self, goal, ns, clauses, i, cont, depth, mark, bodybar):
        self.goal = goal
        self.ns = ns
        self.clauses = clauses
        self.i = i
        self.cont = cont
        self.depth = depth
        self.mark = mark
        self.bodybar = bodybar


class _AltCP:
    __slots__ = ("term", "ns", "barrier", "cont", "depth", "mark")

    def __init__(self, term, ns, barrier, cont, depth, mark):
        self.term = term
        self.ns = ns
        self.barrier = barrier
        self.cont = cont
        self.depth = depth
        self.mark = mark


class _IterCP:
    __slots__ = ("it", "cont", "depth", "mark")

    def __init__(self, it, cont, depth, mark):
        self.it = it
        self.cont = cont
        self.depth = depth
        self.mark = mark


class Machine:
    """One resolution run: goal continuation, choice points, cut barriers."""

    __slots__ = ("engine", "cont", "depth", "peak_depth", "peak_cps", "cps")

    def __init__(self, engine: "Engine", goal: Term, ns: str = "user"):
        self.engine = engine
        self.cont = (("g", goal, ns, 0), None)
        self.depth = 1
        self.peak_depth = 1
        self.peak_cps = 0
        self.cps: list = []

    # -- continuation helpers -------------------------------------------

    def push(self, item) -> None:
        self.cont = (item, self.cont)
        self.depth += 1
        if self.depth > self.peak_depth:
            self.peak_depth = self.depth

    def prune_to(self, h: int) -> None:
        cps = self.cps
        trail = self.engine.trail
        while len(cps) > h:
            cp = cps.pop()
            trail.guards -= 1
            if type(cp) is _IterCP:
                cp.it.close()

    def close(self) -> None:
        self.prune_to(0)

    def _push_cp(self, cp) -> None:
        self.cps.append(cp)
        self.engine.trail.guards += 1
        if len(self.cps) > self.peak_cps:
            self.peak_cps = len(self.cps)

    # -- main loop -------------------------------------------------------

    def solutions(self):
        trail = self.engine.trail
        forward = True
        try:
            while True:
                if forward:
                    if self.cont is None:
                        yield None
                        forward = False
                        continue
                    item, self.cont = self.cont
                    self.depth -= 1
                    if item[0] == "g":
                        forward = self.exec_goal(item[1], item[2], item[3])
                    else:  # "then": if-then-else commit point
                        _, h, term, ns, barrier = item
                        self.prune_to(h)
                        self.push(("g", term, ns, barrier))
                else:
                    cps = self.cps
                    if not cps:
                        return
                    cp = cps[-1]
                    tcp = type(cp)
                    if tcp is _ClauseCP:
                        trail.undo_to(cp.mark)
                        if cp.i >= len(cp.clauses):
                            cps.pop()
                            trail.guards -= 1
                            continue
                        clause = cp.clauses[cp.i]
                        cp.i += 1
                        if self.try_clause(clause, cp.goal, cp.ns, cp.bodybar, cp.cont, cp.depth):
                            forward = True
                    elif tcp is _AltCP:
                        cps.pop()
                        trail.guards -= 1
                        trail.undo_to(cp.mark)
                        self.cont = cp.cont
                        self.depth = cp.depth
                        self.push(("g", cp.term, cp.ns, cp.barrier))
                        forward = True
                    else:  # _IterCP
                        trail.undo_to(cp.mark)
                        try:
                            next(cp.it)
                        except StopIteration:
                            cps.pop()
                            trail.guards -= 1
                            continue
                        cp.mark = trail.mark()
                        self.cont = cp.cont
                        self.depth = cp.depth
                        forward = True
        finally:
            self.close()

    # -- goal execution ---------------------------------------------------

    def exec_goal(self, goal: Term, ns: str, barrier: int) -> bool:
        engine = self.engine
        goal = deref(goal)
        tg = type(goal)
        if tg is Struct:
            name = goal.name
            args = goal.args
            n = len(args)
            if name == "," and n == 2:
                self.push(("g", args[1], ns, barrier))
                self.push(("g", args[0], ns, barrier))
                return True
            if name == ";" and n == 2:
                left = deref(args[0])
                if type(left) is Struct and left.name == "->" and len(left.args) == 2:
                    self.ite(left.args[0], left.args[1], args[1], ns, barrier)
                    return True
                self._push_cp(_AltCP(args[1], ns, barrier, self.cont, self.depth,
                                     engine.trail.mark()))
                self.push(("g", args[0], ns, barrier))
                return True
            if name == "->" and n == 2:
                self.ite(args[0], args[1], FAIL, ns, barrier)
                return True
            if name == "\\+" and n == 1:
                self.ite(args[0], FAIL, TRUE, ns, barrier)
                return True
            if name == "once" and n == 1:
                self.ite(args[0], TRUE, FAIL, ns, barrier)
                return True
            if name == ":" and n == 2:
                m = deref(args[0])
                if type(m) is Var:
                    raise instantiation_error("namespace qualifier")
                if type(m) is not Atom or m.name not in NAMESPACES:
                    raise domain_error("namespace", m)
                self.push(("g", args[1], m.name, barrier))
                return True
            if name == "call":
                self.push(("g", build_call(args), ns, len(self.cps)))
                return True
            if name == "throw" and n == 1:
                ball = deref(args[0])
                if type(ball) is Var:
                    raise instantiation_error("throw/1")
                raise LogicError(resolve_copy(ball))
            fn = engine.builtins.get((name, n))
            if fn is not None:
                return self.run_builtin(fn, args, ns, goal)
            return self.call_user(goal, name, n, ns)
        if tg is Atom:
            name = goal.name
            if name == "true":
                return True
            if name == "fail" or name == "false":
                return False
            if name == "!":
                self.prune_to(barrier)
                return True
            fn = engine.builtins.get((name, 0))
            if fn is not None:
                return self.run_builtin(fn, (), ns, goal)
            return self.call_user(goal, name, 0, ns)
        if tg is Var:
            raise instantiation_error("goal")
        raise type_error("callable", goal)

    def ite(self, cond, then, els, ns: str, barrier: int) -> None:
        pre = len(self.cps)
        self._push_cp(_AltCP(els, ns, barrier, self.cont, self.depth, self.engine.trail.mark()))
        self.push(("then", pre, then, ns, barrier))
        # a cut inside the condition is local: it may not discard the else branch
        self.push(("g", cond, ns, len(self.cps)))

    def run_builtin(self, fn, args, ns: str, goal: Term) -> bool:
        engine = self.engine
        if engine.trace:
            engine.trace_port("call", goal, ns)
        res = fn(self, args, ns)
        if res is True:
            return True
        if res is False or res is None:
            return False
        if type(res) is PushGoal:
            self.push(("g", res.term, res.ns, len(self.cps)))
            return True
        # a generator: one solution per next(); it undoes its own bindings
        trail = engine.trail
        trail.guards += 1
        try:
            next(res)
        except StopIteration:
            trail.guards -= 1
            return False
        except BaseException:
            trail.guards -= 1
            raise
        cp = _IterCP(res, self.cont, self.depth, trail.mark())
        self.cps.append(cp)
        if len(self.cps) > self.peak_cps:
            self.peak_cps = len(self.cps)
        return True

    def call_user(self, goal: Term, name: str, arity: int, ns: str) -> bool:
        engine = self.engine
        entry = engine.preds.get((ns, name, arity))
        if entry is None:
            if engine.unknown == "error":
                raise unknown_procedure(ns, name, arity)
            return False
        if engine.trace:
            engine.trace_port("call", goal, ns)
        clauses = entry.select(goal, engine.indexing)
        if not clauses:
            return False
        bodybar = len(self.cps)
        if len(clauses) > 1:
            self._push_cp(_ClauseCP(goal, ns, clauses, 1, self.cont, self.depth,
                                    engine.trail.mark(), bodybar))
        return self.try_clause(clauses[0], goal, ns, bodybar, self.cont, self.depth)

    def try_clause(self, clause: Clause, goal: Term, ns: str, bodybar: int,
                   cont, depth: int) -> bool:
        engine = self.engine
        engine.clause_attempts += 1
        trail = engine.trail
        mark = trail.mark()
        occurs = engine.occurs_check
        if clause.deep:
            mapping: dict = {}
            head = rename_term(clause.head, mapping)
            if type(head) is Struct:
                for ga, ha in zip(goal.args, head.args):
                    if not unify(ga, ha, trail, occurs):
                        trail.undo_to(mark)
                        return False
            self.cont = cont
            self.depth = depth
            if clause.body is not TRUE:
                self.push(("g", rename_term(clause.body, mapping), ns, bodybar))
            return True
        vs = [Var() for _ in range(clause.nvars)] if clause.nvars else ()
        if clause.head_arg_builders:
            for ga, build in zip(goal.args, clause.head_arg_builders):
                if not unify(ga, build(vs), trail, occurs):
                    trail.undo_to(mark)
                    return False
        self.cont = cont
        self.depth = depth
        body_builder = clause.body_builder
        if body_builder is not None:
            self.push(("g", body_builder(vs), ns, bodybar))
        return True


def build_call(args) -> Term:
    g = deref(args[0])
    extra = args[1:]
    tg = type(g)
    if tg is Var:
        raise instantiation_error("call")
    if not extra:
        return g
    if tg is Atom:
        return Struct(g.name, extra)
    if tg is Struct:
        return Struct(g.name, g.args + tuple(extra))
    raise type_error("callable", g)


class Query:
    """Iterator over solutions of a goal.

    `close()` before exhaustion commits: choice points are dropped but the
    bindings of the last solution stay.  When `protect` is set, exhausting
    the query restores all bindings made since it started.
    """

    def __init__(self, engine: "Engine", goal: Term, ns: str, protect: bool):
        self.machine = Machine(engine, goal, ns)
        self._gen = self._run(engine, protect)

    def _run(self, engine, protect):
        trail = engine.trail
        mark = trail.mark()
        if protect:
            trail.guards += 1
        try:
            yield from self.machine.solutions()
            if protect:
                trail.undo_to(mark)
        finally:
            if protect:
                trail.guards -= 1
            # with no resume points left, nothing can undo past here: the
            # trail is dead weight and can be dropped
            if trail.guards == 0:
                trail.entries.clear()

    def __iter__(self):
        return self

    def __next__(self):
        return next(self._gen)

    def close(self):
        self._gen.close()


class Engine:
    """The clause database plus everything needed to run goals against it."""

    def __init__(self, unknown: str = "error", indexing: bool = True,
                 occurs_check: bool = False, out=None):
        self.trail = Trail(conditional=True)
        self.preds: dict = {}
        self.builtins: dict = {}
        self.expansion_hooks: list = []
        self.unknown = unknown
        self.indexing = indexing
        self.occurs_check = occurs_check
        self.out = out if out is not None else sys.stdout
        self.trace = False
        self.clause_attempts = 0

    # -- registration ----------------------------------------------------

    def register_builtin(self, name: str, arity: int, fn: Callable) -> None:
        key = (name, arity)
        if key in self.builtins:
            raise ValueError(f"builtin {name}/{arity} is already registered")
        self.builtins[key] = fn

    def register_expansion_hook(self, fn: Callable) -> None:
        self.expansion_hooks.append(fn)

    def trace_port(self, port: str, goal: Term, ns: str) -> None:
        from .writer import term_text

        prefix = "" if ns == "user" else f"{ns}:"
        print(f"{port.upper()} {prefix}{term_text(goal)}", file=self.out)

    # -- database --------------------------------------------------------

    def entry(self, ns: str, name: str, arity: int, create: bool = False
              ) -> Optional[PredicateEntry]:
        key = (ns, name, arity)
        e = self.preds.get(key)
        if e is None and create:
            e = PredicateEntry(ns, name, arity)
            self.preds[key] = e
        return e

    def assert_term(self, term: Term, ns: str = "user", front: bool = False) -> None:
        # both M:(H :- B) and (M:H) :- B name the namespace
        head, ns = strip_namespace(term, ns)
        head, body = split_clause(head)
        head, ns = strip_namespace(head, ns)
        th = type(head)
        if th is Var:
            raise instantiation_error("assert")
        if th is Atom:
            name, arity = head.name, 0
        elif th is Struct:
            name, arity = head.name, len(head.args)
        else:
            raise type_error("callable", head)
        if (name, arity) in self.builtins or name in ("," , ";", "->", "!", ":"):
            raise permission_error("modify", Struct("/", (Atom(name), arity)))
        entry = self.entry(ns, name, arity, create=True)
        entry.dynamic = True
        entry.add(Clause(head, body), front=front)

    def retract_term(self, pattern: Term, ns: str = "user") -> bool:
        head, ns = strip_namespace(pattern, ns)
        head, body = split_clause(head)
        head, ns = strip_namespace(head, ns)
        th = type(head)
        if th is Var:
            raise instantiation_error("retract")
        if th is Atom:
            name, arity = head.name, 0
        elif th is Struct:
            name, arity = head.name, len(head.args)
        else:
            raise type_error("callable", head)
        if (name, arity) in self.builtins:
            raise permission_error("modify", Struct("/", (Atom(name), arity)))
        entry = self.preds.get((ns, name, arity))
        if entry is None:
            return False
        trail = self.trail
        for clause in entry.clauses:
            mark = trail.mark()
            mapping: dict = {}
            h = rename_term(clause.head, mapping)
            b = rename_term(clause.body, mapping)
            if unify(head, h, trail, self.occurs_check) and unify(body, b, trail,
                                                                  self.occurs_check):
                entry.remove(clause)
                return True
            trail.undo_to(mark)
        return False

    def retract_all_clauses(self, ns: str, name: str, arity: int,
                            keep: Optional[Callable] = None) -> int:
        entry = self.preds.get((ns, name, arity))
        if entry is None:
            return 0
        if keep is None:
            removed = len(entry.clauses)
            entry.clauses = ()
            entry._dirty = True
            return removed
        kept = tuple(c for c in entry.clauses if keep(c))
        removed = len(entry.clauses) - len(kept)
        entry.clauses = kept
        entry._dirty = True
        return removed

    def clauses_of(self, ns: str, name: str, arity: int) -> list:
        entry = self.preds.get((ns, name, arity))
        if entry is None:
            return []
        return [(c.head, c.body) for c in entry.clauses]

    # -- execution ---------------------------------------------------------

    def solve(self, goal: Term, ns: str = "user", protect: bool = False) -> Query:
        return Query(self, goal, ns, protect)

    def solve_once(self, goal: Term, ns: str = "user") -> bool:
        """Run a goal, commit to its first solution; keeps its bindings."""
        q = self.solve(goal, ns, protect=True)
        try:
            next(q)
            return True
        except StopIteration:
            return False
        finally:
            q.close()

    def findall_bindings(self, goal: Term, vars_, ns: str = "user") -> list:
        """Snapshots of the given variables for every solution of the goal."""
        out = []
        q = self.solve(goal, ns, protect=True)
        for _ in q:
            out.append(tuple(resolve_copy(v) for v in vars_))
        return out

    # -- consult -----------------------------------------------------------

    def expand_term(self, term: Term) -> list:
        items = [term]
        for hook in self.expansion_hooks:
            out: list = []
            for t in items:
                got = hook(t)
                if got is None:
                    out.append(t)
                else:
                    out.extend(got)
            items = out
        return items

    def consult_text(self, text: str, origin: str = "<consult>") -> LoadReport:
        report = LoadReport(origin)
        try:
            clauses = list(read_terms(text))
        except ReaderError as err:
            report.errors.append((err.line, str(err)))
            return report
        for term, _varmap, line in clauses:
            try:
                expanded = self.expand_term(term)
            except LogicError as err:
                report.errors.append((line, f"expansion failed: {err}"))
                continue
            for t in expanded:
                t = deref(t)
                if type(t) is Struct and t.name in (":-", "?-") and len(t.args) == 1:
                    report.directives += 1
                    try:
                        if not self.solve_once(t.args[0], "user"):
                            report.warnings.append((line, f"directive failed: {t.args[0]}"))
                    except LogicError as err:
                        report.errors.append((line, f"directive error: {err}"))
                    continue
                try:
                    self.assert_term(t, "user")
                    report.clauses += 1
                except LogicError as err:
                    report.errors.append((line, f"bad clause: {err}"))
        return report

    def consult_file(self, path: str) -> LoadReport:
        with open(path, "r", encoding="utf-8") as fh:
            return self.consult_text(fh.read(), origin=path)


def split_clause(term: Term):
    t = deref(term)
    if type(t) is Struct and t.name == ":-" and len(t.args) == 2:
        return t.args[0], deref(t.args[1])
    return t, TRUE


def strip_namespace(head: Term, ns: str):
    h = deref(head)
    if type(h) is Struct and h.name == ":" and len(h.args) == 2:
        m = deref(h.args[0])
        if type(m) is not Atom or m.name not in NAMESPACES:
            raise domain_error("namespace", m)
        return deref(h.args[1]), m.name
    return h, ns
