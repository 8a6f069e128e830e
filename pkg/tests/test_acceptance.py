"""Acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary)
before asserting, so a failing criterion still reports its measurement.

Seeds: 107 is the first seed in 0..299 whose example-1 oracle survives
1000 jumps without an infinite jump time; 11 is the fixed example-2 stream.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate as sci
from scipy.stats import kstest, ks_2samp

from pdmpsim.bench import median_seconds, run_bench
from pdmpsim.chv import ChvState, chv_segment, chv_simulate
from pdmpsim.examples import (compare_to_oracle, example1_model, example1_oracle,
                              example2_model, example2_oracle, example3_model,
                              example3_rate, poisson_model)
from pdmpsim.fjm import RateBound, count_fictitious, fjm_simulate
from pdmpsim.model import EventKind, ExpStream
from pdmpsim.ode_core import OdeProblem, SolverConfig, find_root, integrate
from pdmpsim.tjm import tjm_event_simulate

TIGHT = SolverConfig(atol=1e-12, rtol=1e-12)
N_LAW = 10_000


def test_criterion_1_example1_oracle(acceptance_report):
    t0 = time.perf_counter()
    oracle = example1_oracle(ExpStream(107), 1000)
    traj = chv_simulate(example1_model(), max_jumps=len(oracle), stream=ExpStream(107),
                        config=TIGHT)
    table = compare_to_oracle(traj, oracle)
    elapsed = time.perf_counter() - t0
    ok = (len(table.rows) == len(oracle) == 1000 and table.max_err_t <= 1e-6
          and table.max_err_x <= 1e-4 and elapsed <= 60)
    acceptance_report(1, "example 1 vs closed form", ok,
                      f"{len(table.rows)} jumps, max|dT|={table.max_err_t:.2e}, "
                      f"max|dx|={table.max_err_x:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_example2_oracle(acceptance_report):
    t0 = time.perf_counter()
    oracle = example2_oracle(ExpStream(11), 20)
    chv = compare_to_oracle(chv_simulate(example2_model(), max_jumps=20,
                                         stream=ExpStream(11), config=TIGHT), oracle)
    tjm = compare_to_oracle(tjm_event_simulate(example2_model(), max_jumps=20,
                                               stream=ExpStream(11), config=TIGHT), oracle)
    elapsed = time.perf_counter() - t0
    ratio = tjm.max_err_t / chv.max_err_t
    ok = chv.max_err_t <= 1e-6 and ratio >= 10 and elapsed <= 10
    acceptance_report(2, "example 2 vs closed form", ok,
                      f"chv max|dT|={chv.max_err_t:.2e}, tjm-event max|dT|="
                      f"{tjm.max_err_t:.2e}, ratio={ratio:.2f} (need >= 10), {elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def example3_first_jumps():
    """10^4 first jumps per engine on independent seeds, through the bench runner."""
    t0 = time.perf_counter()
    chv = run_bench(example3_model(), ["chv"], 1, N_LAW, 1001)
    t_chv = time.perf_counter() - t0
    fjm = run_bench(example3_model(), ["fjm"], 1, N_LAW, 2002,
                    bound=RateBound.constant(1.1))
    t_fjm = time.perf_counter() - t0 - t_chv
    return chv, fjm, t_chv, t_fjm


def test_criterion_3_law_equivalence(example3_first_jumps, acceptance_report):
    chv, fjm, t_chv, t_fjm = example3_first_jumps
    a = np.array([r.jump_times[0] for r in chv])
    b = np.array([r.jump_times[0] for r in fjm])
    res = ks_2samp(a, b)
    ok = len(a) == len(b) == N_LAW and res.pvalue > 0.01 and t_chv <= 300 and t_fjm <= 300
    acceptance_report(3, "CHV vs FJM law of T_1", ok,
                      f"KS D={res.statistic:.4f} p={res.pvalue:.3f}, means {a.mean():.4f}"
                      f" / {b.mean():.4f}, {t_chv:.0f}s + {t_fjm:.0f}s")
    assert ok


def expected_first_jump_example3():
    # independent route: scipy's integrator on (Lambda, survival integral)
    def rhs(t, z):
        x = 0.05 * math.exp(3.0 * t)
        return [example3_rate([x]), math.exp(-z[0])]

    sol = sci.solve_ivp(rhs, (0.0, 60.0), [0.0, 0.0], method="DOP853",
                        rtol=1e-12, atol=1e-14)
    return sol.y[1, -1]


def test_fictitious_accounting(example3_first_jumps):
    """Candidates before the first acceptance number lam * E[T_1], so the
    mean fictitious count is lam * E[T_1] - 1."""
    _, fjm, _, _ = example3_first_jumps
    predicted = 1.1 * expected_first_jump_example3() - 1.0
    observed = np.mean([r.fictitious for r in fjm])
    assert abs(observed - predicted) <= 0.05 * predicted


def test_criterion_4_thinning(acceptance_report):
    model = poisson_model(0.5)
    bound = RateBound.constant(1.0)
    t1 = np.array([fjm_simulate(model, bound, stream=ExpStream.for_realization(404, k),
                                max_jumps=1).jump_times()[0] for k in range(N_LAW)])
    p = kstest(t1, "expon", args=(0, 2.0)).pvalue
    ok = abs(t1.mean() - 2.0) <= 0.06 and p > 0.01
    acceptance_report(4, "thinning exactness", ok,
                      f"mean T_1={t1.mean():.4f} (2.0 +- 0.06), KS p={p:.3f}")
    assert ok


def test_criterion_5_time_change_identity(acceptance_report):
    config = SolverConfig()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        x0 = rng.uniform(0.01, 10.0)
        xd = int(rng.integers(0, 2))
        s = rng.exponential()
        end, _, _ = chv_segment(example3_model(),
                                ChvState(np.array([x0]), 0.0, np.array([xd])), s, config)
        a = 3.0 if xd == 0 else -4.0
        mass, _ = sci.quad(lambda t: example3_rate([x0 * math.exp(a * t)]), 0.0, end.tau,
                           epsabs=1e-13, epsrel=1e-13, limit=200)
        worst = max(worst, abs(mass - s) / (100 * max(config.atol, config.rtol * s)))
    ok = worst <= 1.0
    acceptance_report(5, "time-change identity", ok,
                      f"100 segments, worst |int R - S| / budget = {worst:.3f}")
    assert ok


def test_criterion_6_infinite_jump(acceptance_report):
    seed = next(s for s in range(1000) if example1_oracle(ExpStream(s), 10_000).terminated)
    oracle = example1_oracle(ExpStream(seed), 10_000)
    n = len(oracle)
    t_last = oracle.times[-1] if n else 0.0
    worst, path_ok = 0.0, True
    # horizons far enough out that the rate collapses before t_end, so the
    # engine must abandon the time change and flow F in physical time
    for horizon in (0.5, 1.0, 5.0):
        t_end = t_last + horizon
        traj = chv_simulate(example1_model(), t_end, n + 5, ExpStream(seed), TIGHT)
        last = traj.records[-1]
        fallbacks = (traj.warnings.get("rate_floor_hits", 0)
                     + traj.warnings.get("s_step_underflows", 0))
        path_ok &= (last.kind is EventKind.HORIZON_END and traj.n_jumps == n
                    and fallbacks == 1 and last.time == t_end)
        # F integrated in closed form from the start of the unreachable segment
        t_j = traj.jumps[-1].time if n else 0.0
        x_j = traj.jumps[-1].xc_after[0] if n else 1.0
        a = 100.0 if last.xd_after[0] % 2 == 0 else -100.0
        direct = x_j * math.exp(a * (t_end - t_j))
        worst = max(worst, abs(last.xc_after[0] - direct))
    ok = path_ok and worst <= 100 * TIGHT.atol
    acceptance_report(6, "infinite jump time", ok,
                      f"seed {seed}: {n} jumps then S_n unreachable; horizon_end via "
                      f"fallback={path_ok}; max|x(t_end) - flow|={worst:.2e}")
    assert ok


def test_criterion_7_convergence(acceptance_report):
    oracle = example2_oracle(ExpStream(11), 20)
    errs = []
    for tol in (1e-8, 1e-10, 1e-12):
        traj = chv_simulate(example2_model(), max_jumps=20, stream=ExpStream(11),
                            config=SolverConfig(atol=tol, rtol=tol))
        errs.append(compare_to_oracle(traj, oracle).max_err_t)
    ok = errs[0] > errs[1] > errs[2]
    acceptance_report(7, "convergence on example 2", ok,
                      "max|dT| = " + ", ".join(f"{e:.2e}" for e in errs))
    assert ok


def test_criterion_8_benchmark_ordering(acceptance_report):
    model, bound = example3_model(), RateBound.constant(1.1)
    one = run_bench(model, ["chv", "fjm"], 1, 1000, 8, bound=bound)
    three = run_bench(model, ["chv", "fjm"], 3, 200, 8, bound=bound)
    m1 = {m: median_seconds(one, m) for m in ("chv", "fjm")}
    m3 = {m: median_seconds(three, m) for m in ("chv", "fjm")}
    ok = m1["chv"] < m1["fjm"]
    acceptance_report(8, "CHV faster than FJM", ok,
                      f"1 jump medians chv={m1['chv'] * 1e3:.2f}ms fjm={m1['fjm'] * 1e3:.2f}ms;"
                      f" 3 jumps (reported only) chv={m3['chv'] * 1e3:.2f}ms "
                      f"fjm={m3['fjm'] * 1e3:.2f}ms")
    assert ok


def test_criterion_9_integrator(acceptance_report):
    errs = []
    for tol in (1e-6, 1e-9, 1e-12):
        sol = integrate(OdeProblem(lambda x, t: x, [1.0], 0.0, 1.0),
                        SolverConfig(atol=tol, rtol=tol))
        errs.append(abs(sol.endpoint_state[0] - math.e) / tol)
    line = integrate(OdeProblem(lambda x, t: np.ones(1), [0.0], 0.0, 1.0))
    root_err = abs(find_root(line, lambda x, t: x[0] - 0.5, (0.0, 1.0)) - 0.5)
    ok = max(errs) <= 10 and root_err <= 1e-12
    acceptance_report(9, "integrator validation", ok,
                      "error/rtol = " + ", ".join(f"{e:.2f}" for e in errs)
                      + f"; root error {root_err:.1e}")
    assert ok
