import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import kstest

from pdmpsim.errors import BoundViolated
from pdmpsim.examples import example3_bound, example3_model, example3_rate, poisson_model
from pdmpsim.fjm import RateBound, count_fictitious, fjm_simulate
from pdmpsim.model import EventKind, ExpStream


def first_jump(model, bound, seed, k):
    traj = fjm_simulate(model, bound, stream=ExpStream.for_realization(seed, k),
                        max_jumps=1)
    return traj.jump_times()[0], count_fictitious(traj)


def test_tight_bound_accepts_everything():
    traj = fjm_simulate(poisson_model(2.0), RateBound.constant(2.0),
                        stream=ExpStream(6), max_jumps=1000)
    assert count_fictitious(traj) == 0
    gaps = np.diff(np.concatenate([[0.0], traj.jump_times()]))
    assert abs(gaps.mean() - 0.5) <= 0.5 * 3 / math.sqrt(1000)


def test_candidates_are_scaled_unit_draws():
    traj = fjm_simulate(poisson_model(2.0), RateBound.constant(2.0),
                        stream=ExpStream(6), max_jumps=5)
    draws = ExpStream(6).take(5)
    assert np.allclose(traj.jump_times(), np.cumsum(draws / 2.0), rtol=1e-15)


def test_half_acceptance_thinning():
    pairs = [first_jump(poisson_model(0.5), RateBound.constant(1.0), 3, k)
             for k in range(10_000)]
    t1 = np.array([p[0] for p in pairs])
    fict = np.array([p[1] for p in pairs])
    assert abs(t1.mean() - 2.0) <= 0.06
    assert kstest(t1, "expon", args=(0, 2.0)).pvalue > 0.01
    assert abs(fict.mean() - 1.0) <= 0.05


def test_bound_violation():
    with pytest.raises(BoundViolated):
        fjm_simulate(poisson_model(2.0), RateBound.constant(1.0), max_jumps=1)


def test_round_off_slack_is_tolerated():
    traj = fjm_simulate(poisson_model(1.0 + 5e-13), RateBound.constant(1.0),
                        max_jumps=3)
    assert traj.n_jumps == 3


def test_fictitious_events_keep_state():
    traj = fjm_simulate(example3_model(), RateBound.constant(1.1), 6.0,
                        stream=ExpStream(12))
    fict = traj.events(EventKind.FICTITIOUS)
    assert fict
    for rec in fict:
        assert np.array_equal(rec.xc_before, rec.xc_after)
        assert np.array_equal(rec.xd_before, rec.xd_after)


def test_acceptance_while_rate_is_low():
    # x_c stays in [0.05, 0.23] before t = 0.5, so R/1.1 is about 0.0975
    accepted = total = 0
    for k in range(3000):
        traj = fjm_simulate(example3_model(), RateBound.constant(1.1), 0.5,
                            stream=ExpStream.for_realization(5, k), max_jumps=1)
        cands = [r for r in traj.records if r.kind is not EventKind.HORIZON_END]
        total += len(cands)
        accepted += sum(r.kind is EventKind.TRUE_JUMP for r in cands)
    p = accepted / total
    expected = example3_rate([0.1]) / 1.1
    assert abs(p - expected) <= 4 * math.sqrt(expected * (1 - expected) / total) + 0.002


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 9))
def test_per_segment_bound_never_violated(seed):
    traj = fjm_simulate(example3_model(), example3_bound(), 8.0,
                        stream=ExpStream(seed))
    times = [r.time for r in traj.records]
    assert all(b >= a for a, b in zip(times, times[1:]))
    assert times[-1] <= 8.0


def test_horizon_end_record():
    traj = fjm_simulate(poisson_model(1.0), RateBound.constant(1.0), 0.25,
                        stream=ExpStream.from_values([1.0]))
    assert [r.kind for r in traj.records] == [EventKind.HORIZON_END]
    assert traj.records[0].time == 0.25


def test_count_fictitious_zero_on_plain_trajectory():
    traj = fjm_simulate(poisson_model(1.0), RateBound.constant(1.0), max_jumps=20)
    assert count_fictitious(traj) == 0


def test_bound_validation():
    with pytest.raises(ValueError):
        RateBound.constant(0.0)
    with pytest.raises(ValueError):
        RateBound.per_segment(lambda xc, xd, t: -1.0).at(None, None, 0.0)
