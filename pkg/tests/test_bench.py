import io

import pytest

from objlog.bench import CASE_ORDER, run_benchmarks
from objlog.runtime import Runtime


def test_bench_smoke_runs_all_cases():
    rt = Runtime(out=io.StringIO())
    report = run_benchmarks(rt, iterations=300, batches=2, warmup_batches=1)
    assert set(report.per_call_us) == set(CASE_ORDER)
    assert all(us >= 0.0 for us in report.per_call_us.values())
    table = report.table()
    assert "normalise" in table and "termarg" in table
    assert "warm-up" in table
    # the harness frees its objects
    assert rt.kernel.live_count == rt.baseline_live


def test_bench_rejects_bad_iteration_counts():
    rt = Runtime(out=io.StringIO())
    with pytest.raises(ValueError):
        run_benchmarks(rt, iterations=0)
    with pytest.raises(ValueError):
        run_benchmarks(rt, iterations=100, batches=0)


def test_bench_report_ratio_helper():
    rt = Runtime(out=io.StringIO())
    report = run_benchmarks(rt, iterations=200, batches=1, warmup_batches=0)
    assert report.ratio("noarg", "noarg") == 1.0
