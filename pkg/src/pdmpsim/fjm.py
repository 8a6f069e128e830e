"""Rejection (thinning) simulation with a dominating rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BoundViolated
from .model import (EventKind, ExpStream, Method, PdmpModel, Trajectory,
                    integrate_flow, make_record)
from .ode_core import SolverConfig

__all__ = ["RateBound", "fjm_simulate", "count_fictitious"]

# acceptance ratios up to 1 + this are treated as round-off
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class RateBound:
    """Upper bound on the total rate.

    ``constant`` bounds hold globally. ``per_segment`` bounds are
    recomputed from the state after every event (true or fictitious) and
    only need to dominate the rate until the next event.
    """

    kind: str
    value: float = math.nan
    bound_fn: Optional[Callable] = None

    @classmethod
    def constant(cls, value: float) -> "RateBound":
        if not (value > 0 and math.isfinite(value)):
            raise ValueError("constant bound must be positive and finite")
        return cls("constant", value=float(value))

    @classmethod
    def per_segment(cls, bound_fn: Callable) -> "RateBound":
        return cls("per_segment", bound_fn=bound_fn)

    def at(self, xc, xd, t) -> float:
        if self.kind == "constant":
            return self.value
        lam = float(self.bound_fn(xc, xd, t))
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError(f"rate bound must be positive and finite, got {lam!r}")
        return lam


def fjm_simulate(model: PdmpModel, bound: RateBound, t_end: float = math.inf,
                 max_events: int = 10_000_000,
                 stream: ExpStream | None = None,
                 config: SolverConfig = SolverConfig(),
                 max_jumps: Optional[int] = None) -> Trajectory:
    """Simulate by thinning a rate-``lam`` Poisson stream of candidates.

    The flow is integrated in physical time to each candidate time
    ``T + S/lam``; the candidate becomes a true jump with probability
    ``R(X(T-)) / lam``, otherwise a fictitious event that keeps the state.
    Stops at ``t_end``, after ``max_events`` candidates, or after
    ``max_jumps`` true jumps.

    Raises
    ------
    BoundViolated
        ``R > lam`` at a candidate time.
    """
    if not t_end > model.initial_time:
        raise ValueError("t_end must exceed the model's initial time")
    stream = ExpStream(0) if stream is None else stream

    t = float(model.initial_time)
    xc = model.initial_continuous.copy()
    xd = model.initial_discrete.copy()
    records = []
    traj = Trajectory(records, t_end, model.name, stream.seed, Method.FJM,
                      meta={"atol": config.atol, "rtol": config.rtol})
    n_events = n_true = 0

    while n_events < max_events and (max_jumps is None or n_true < max_jumps):
        lam = bound.at(xc, xd, t)
        s_n = stream.exp()
        t_next = t + s_n / lam
        if t_next > t_end:
            x_end, _ = integrate_flow(model, xc, xd, t, t_end, config)
            records.append(make_record(len(records) + 1, t_end, x_end, xd,
                                       x_end, xd, EventKind.HORIZON_END, s_n))
            break
        x_minus, _ = integrate_flow(model, xc, xd, t, t_next, config)
        t = t_next
        ratio = model.rate(x_minus, xd, t) / lam
        if ratio > 1.0 + BOUND_SLACK:
            raise BoundViolated(
                f"total rate exceeds bound {lam!r} by factor {ratio!r} at t={t!r}")
        n_events += 1
        if stream.uniform() < ratio:
            new_xc, new_xd = model.jump_kernel(x_minus.copy(), xd.copy(), t,
                                               stream.uniform)
            records.append(make_record(len(records) + 1, t, x_minus, xd,
                                       new_xc, new_xd, EventKind.TRUE_JUMP, s_n))
            n_true += 1
            xc = np.array(new_xc, dtype=float)
            xd = np.array(new_xd, dtype=np.int64)
        else:
            records.append(make_record(len(records) + 1, t, x_minus, xd,
                                       x_minus, xd, EventKind.FICTITIOUS, s_n))
            xc = x_minus
        if t >= t_end:
            break

    return traj


def count_fictitious(traj: Trajectory) -> int:
    """Number of rejected candidates in a thinning trajectory."""
    return sum(r.kind == EventKind.FICTITIOUS for r in traj.records)
