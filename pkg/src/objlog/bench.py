"""Call-overhead benchmark harness.

Five cases mirror the classic method-call shapes: two native-implemented
sends on an `area` (no argument, one integer argument) and three sends to a
logic-defined `bench` class (no argument, integer argument, term argument).
Each case is a counted loop written in logic, so the numbers measure
calling methods *from* logic code.  An empty counting loop is timed the
same way and subtracted as harness overhead.

Absolute times are hardware-bound and only informational; the quantities
that matter are the ratios between cases.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

from .terms import Atom, ObjRef, Struct

CASE_ORDER = ("normalise", "x", "noarg", "intarg", "termarg")

_CASE_PREDS = {
    "normalise": "bench_normalise",
    "x": "bench_x",
    "noarg": "bench_noarg",
    "intarg": "bench_intarg",
    "termarg": "bench_termarg",
}

_CASE_OBJ = {
    "normalise": "area",
    "x": "area",
    "noarg": "bench",
    "intarg": "bench",
    "termarg": "bench",
}


@dataclass
class BenchReport:
    iterations: int
    batches: int
    warmup_batches: int
    empty_us: float
    per_call_us: dict = field(default_factory=dict)
    raw_seconds: dict = field(default_factory=dict)

    def ratio(self, a: str, b: str) -> float:
        return self.per_call_us[a] / self.per_call_us[b]

    def table(self) -> str:
        lines = [
            f"iterations per batch: {self.iterations}",
            f"batches: {self.batches} (plus {self.warmup_batches} warm-up, discarded)",
            f"empty-loop overhead: {self.empty_us:.3f} us/iteration (subtracted)",
            "",
            f"{'case':<12} {'class':<8} {'us/call':>10} {'vs normalise':>14}",
        ]
        base = self.per_call_us["normalise"]
        for label in CASE_ORDER:
            us = self.per_call_us[label]
            lines.append(f"{label:<12} {_CASE_OBJ[label]:<8} {us:>10.3f} {us / base:>14.2f}")
        return "\n".join(lines)


def run_benchmarks(rt, iterations: int = 20_000, batches: int = 5,
                   warmup_batches: int = 1) -> BenchReport:
    """Median-of-batches timing for every case; loads the bench program and
    creates the target objects in the given runtime."""
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    if batches <= 0:
        raise ValueError("batches must be positive")
    report = rt.consult_program("bench")
    if not report.ok:
        raise RuntimeError(f"bench program failed to load: {report.errors}")

    area = rt.bridge.new_from_spec(Struct("area", (0, 0, 10, 10)))
    if rt.kernel.find_class("bench") is None:
        raise RuntimeError("bench class missing")
    bench_obj = rt.bridge.new_from_spec(Atom("bench"))
    objs = {"area": area, "bench": bench_obj}

    def run_goal(goal) -> float:
        t0 = time.perf_counter()
        q = rt.engine.solve(goal)
        try:
            next(q)
        except StopIteration:
            raise RuntimeError(f"benchmark goal failed: {goal}")
        finally:
            q.close()
        return time.perf_counter() - t0

    def time_case(goal) -> list:
        for _ in range(warmup_batches):
            run_goal(goal)
        return [run_goal(goal) for _ in range(batches)]

    out = BenchReport(iterations, batches, warmup_batches, 0.0)

    empty_goal = Struct("bench_empty", (iterations,))
    empty_batches = time_case(empty_goal)
    empty_med = statistics.median(empty_batches)
    out.empty_us = empty_med / iterations * 1e6
    out.raw_seconds["empty"] = empty_batches

    for label in CASE_ORDER:
        obj = objs[_CASE_OBJ[label]]
        goal = Struct(_CASE_PREDS[label], (iterations, ObjRef(obj.oid)))
        case_batches = time_case(goal)
        out.raw_seconds[label] = case_batches
        med = statistics.median(case_batches)
        us = max((med - empty_med) / iterations * 1e6, 0.0)
        out.per_call_us[label] = us

    rt.call(f"free(@{area.oid})")
    rt.call(f"free(@{bench_obj.oid})")
    return out
