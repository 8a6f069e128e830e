import math

import numpy as np
import pytest

from pdmpsim.bench import BenchResult, histogram, median_seconds, run_bench, simulate
from pdmpsim.errors import EmptyResults, InvalidJumpCount
from pdmpsim.examples import example1_model, example3_model, poisson_model
from pdmpsim.fjm import RateBound
from pdmpsim.model import ExpStream
from pdmpsim.ode_core import SolverConfig


def synthetic(method, times):
    return [BenchResult(method, k, float(t), 1, 0, 0) for k, t in enumerate(times)]


def test_zero_jumps_rejected():
    with pytest.raises(InvalidJumpCount):
        run_bench(example3_model(), ["chv"], 0, 5, 0)


def test_fjm_needs_bound():
    with pytest.raises(ValueError):
        run_bench(example3_model(), ["fjm"], 1, 5, 0)


def test_unknown_method():
    with pytest.raises(ValueError):
        run_bench(example3_model(), ["ssa"], 1, 5, 0)


def test_results_tagged_and_reproducible():
    kw = dict(bound=RateBound.constant(1.1))
    a = run_bench(example3_model(), ["chv", "fjm", "tjm-event"], 2, 6, 42, **kw)
    b = run_bench(example3_model(), ["chv", "fjm", "tjm-event"], 2, 6, 42, **kw)
    assert len(a) == 18
    key = lambda r: (r.method, r.realization)
    for ra, rb in zip(sorted(a, key=key), sorted(b, key=key)):
        assert ra.jump_times == rb.jump_times
        assert (ra.jumps, ra.fictitious) == (rb.jumps, rb.fictitious)
        assert ra.seconds > 0
    assert {r.realization for r in a if r.method == "chv"} == set(range(6))


def test_realization_stream_matches_direct_run():
    res = run_bench(example3_model(), ["chv"], 3, 2, 9)
    direct = simulate("chv", example3_model(), ExpStream.for_realization(9, 1),
                      SolverConfig(), n_jumps=3)
    assert res[1].jump_times == tuple(direct.jump_times())


def test_threaded_batch_matches_serial():
    serial = run_bench(example3_model(), ["chv"], 1, 4, 3)
    threaded = run_bench(example3_model(), ["chv"], 1, 4, 3, n_jobs=2)
    assert sorted(r.jump_times for r in serial) == sorted(r.jump_times for r in threaded)


def test_engine_errors_are_recorded():
    res = run_bench(example1_model(), ["fjm"], 2, 3, 1, bound=RateBound.constant(0.5))
    assert all(r.error == "BoundViolated" for r in res)
    with pytest.raises(EmptyResults):
        histogram(res)


def test_on_result_callback():
    seen = []
    run_bench(poisson_model(), ["chv"], 1, 3, 0, on_result=seen.append)
    assert len(seen) == 3


def test_histogram_uniform_counts():
    n, bins = 20_000, 10
    times = np.random.default_rng(0).uniform(0.0, 1.0, n)
    rows = histogram(synthetic("chv", times), bins)
    assert len(rows) == bins
    p = 1 / bins
    sigma = math.sqrt(n * p * (1 - p))
    for row in rows:
        assert abs(row.count - n * p) <= 5 * sigma


def test_histogram_identical_times():
    rows = histogram(synthetic("chv", [0.004] * 50), 8)
    assert sum(r.count > 0 for r in rows) == 1
    assert sum(r.count for r in rows) == 50


def test_histogram_disjoint_methods():
    res = synthetic("chv", np.linspace(0.0, 1.0, 40)) + synthetic("fjm", np.linspace(2.0, 3.0, 40))
    rows = histogram(res, 10)
    occupied = {m: {(r.bin_lo, r.bin_hi) for r in rows if r.method == m and r.count}
                for m in ("chv", "fjm")}
    assert not occupied["chv"] & occupied["fjm"]
    edges = [(r.bin_lo, r.bin_hi) for r in rows if r.method == "chv"]
    assert edges == [(r.bin_lo, r.bin_hi) for r in rows if r.method == "fjm"]


def test_histogram_bins_validated():
    with pytest.raises(ValueError):
        histogram(synthetic("chv", [1.0, 2.0]), 1)


def test_median_seconds():
    assert median_seconds(synthetic("chv", [1.0, 3.0, 2.0]), "chv") == 2.0
