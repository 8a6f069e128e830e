"""Monte Carlo timing harness: per-realization wall time of each engine."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .chv import ChvOptions, chv_simulate
from .errors import EmptyResults, InvalidJumpCount, PdmpError
from .fjm import RateBound, count_fictitious, fjm_simulate
from .model import ExpStream, PdmpModel, Trajectory
from .ode_core import SolverConfig
from .tjm import tjm_event_simulate

__all__ = ["BenchResult", "HistogramRow", "run_bench", "histogram",
           "normalize_method", "simulate", "median_seconds"]

METHODS = ("chv", "fjm", "tjm_event")


def normalize_method(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from chv, fjm, tjm-event")
    return key


def simulate(method: str, model: PdmpModel, stream: ExpStream,
             config: SolverConfig, *, t_end: float = math.inf,
             n_jumps: Optional[int] = None, bound: Optional[RateBound] = None,
             sample_rate: float = 0.0) -> Trajectory:
    """Dispatch to one engine with a common signature."""
    method = normalize_method(method)
    max_jumps = 1_000_000 if n_jumps is None else n_jumps
    if method == "chv":
        return chv_simulate(model, t_end, max_jumps, stream, config,
                            ChvOptions(sample_rate=sample_rate))
    if method == "fjm":
        if bound is None:
            raise ValueError("the fjm method needs a rate bound")
        return fjm_simulate(model, bound, t_end, stream=stream, config=config,
                            max_jumps=max_jumps)
    return tjm_event_simulate(model, t_end, max_jumps, stream, config)


@dataclass
class BenchResult:
    method: str
    realization: int
    seconds: float
    jumps: int
    fictitious: int
    seed: int
    error: Optional[str] = None
    jump_times: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class HistogramRow:
    method: str
    bin_lo: float
    bin_hi: float
    count: int


def _one(method, model, n_jumps, base_seed, k, config, bound) -> BenchResult:
    stream = ExpStream.for_realization(base_seed, k)
    t0 = time.perf_counter()
    try:
        traj = simulate(method, model, stream, config, n_jumps=n_jumps, bound=bound)
    except PdmpError as exc:
        seconds = time.perf_counter() - t0
        return BenchResult(method, k, seconds, 0, 0, base_seed,
                           error=type(exc).__name__)
    seconds = time.perf_counter() - t0
    return BenchResult(method, k, seconds, traj.n_jumps,
                       count_fictitious(traj) if method == "fjm" else 0,
                       base_seed, jump_times=tuple(traj.jump_times()))


def run_bench(model: PdmpModel, methods: Iterable[str], n_jumps: int,
              realizations: int, base_seed: int,
              config: SolverConfig = SolverConfig(),
              bound: Optional[RateBound] = None,
              on_result: Optional[Callable[[BenchResult], None]] = None,
              n_jobs: int = 1) -> list:
    """Time ``realizations`` runs of each method up to ``n_jumps`` jumps.

    Realization ``k`` of every method replays the stream derived from
    ``(base_seed, k)``. Each method gets one untimed warm-up run first.
    Engine errors are recorded in ``BenchResult.error`` and the batch goes
    on. ``on_result`` sees each result as soon as it is produced.
    """
    if n_jumps < 1:
        raise InvalidJumpCount(f"n_jumps must be >= 1, got {n_jumps}")
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    methods = [normalize_method(m) for m in methods]
    if "fjm" in methods and bound is None:
        raise ValueError("the fjm method needs a rate bound")

    results = []

    def emit(res):
        results.append(res)
        if on_result is not None:
            on_result(res)

    for method in methods:
        _one(method, model, n_jumps, base_seed, 0, config, bound)  # warm-up

    # methods alternate within a realization so drift in machine load
    # does not favour whichever method runs first
    tasks = [(method, k) for k in range(realizations) for method in methods]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_one, method, model, n_jumps, base_seed,
                                   k, config, bound) for method, k in tasks]
            for fut in futures:
                emit(fut.result())
    else:
        for method, k in tasks:
            emit(_one(method, model, n_jumps, base_seed, k, config, bound))
    return results


def histogram(results, bins: int = 20) -> list:
    """Equal-width histogram of wall times over the pooled range.

    Failed realizations are left out.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    ok = [r for r in results if r.error is None]
    if not ok:
        raise EmptyResults("no successful results to bin")
    pooled = np.array([r.seconds for r in ok])
    edges = np.histogram_bin_edges(pooled, bins=bins)
    rows = []
    for method in dict.fromkeys(r.method for r in ok):
        times = np.array([r.seconds for r in ok if r.method == method])
        counts, _ = np.histogram(times, bins=edges)
        rows.extend(HistogramRow(method, float(lo), float(hi), int(c))
                    for lo, hi, c in zip(edges[:-1], edges[1:], counts))
    return rows


def median_seconds(results, method: str) -> float:
    return float(np.median([r.seconds for r in results
                            if r.method == method and r.error is None]))
