"""Jump-time computation by change of time variable.

Between jumps the process is integrated in the variable
``s = int_{T_{n-1}}^{t} R(X(u)) du`` instead of physical time. In that
variable the next jump happens at the fixed value ``s = S_n`` and the
physical clock ``tau(s)`` becomes one extra ODE component::

    dy/ds   = F(y, tau) / R(y, tau)
    dtau/ds = 1 / R(y, tau)

so locating a jump is a plain initial value problem with no event
detection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NegativeRate, RateFloorHit, StepUnderflow
from .model import (EventKind, ExpStream, Method, PdmpModel, Trajectory,
                    integrate_flow, make_record)
from .ode_core import (DenseSolution, OdeProblem, SolverConfig, find_root,
                       integrate, root_time_tolerance)

__all__ = [
    "ChvState",
    "ChvOptions",
    "SegmentOutcome",
    "chv_segment",
    "chv_simulate",
    "chv_simulate_timedep",
]


@dataclass(frozen=True)
class ChvState:
    y: np.ndarray
    tau: float
    discrete: np.ndarray


@dataclass(frozen=True)
class ChvOptions:
    """Engine options.

    ``sample_rate`` adds a constant-rate Poisson stream of phantom events
    that record the flow without changing the state; it also keeps the
    time change well defined where the model's rate vanishes.
    """

    rate_floor: float = 1e-300
    sample_rate: float = 0.0
    t_horizon: float = math.inf

    def __post_init__(self):
        if not self.rate_floor > 0:
            raise ValueError("rate_floor must be positive")
        if not (self.sample_rate >= 0 and math.isfinite(self.sample_rate)):
            raise ValueError("sample_rate must be finite and non-negative")


class SegmentOutcome(str, enum.Enum):
    JUMP_REACHED = "jump_reached"
    HORIZON_REACHED = "horizon_reached"


def _time_changed_rhs(model: PdmpModel, xd, opts: ChvOptions):
    d = model.dim_continuous
    F, R = model.vector_field, model.total_rate
    lam, floor = opts.sample_rate, opts.rate_floor

    def rhs(z, s):
        y = z[:d]
        tau = z[d]
        r_model = float(R(y, xd, tau))
        r = r_model + lam
        if not r > floor:
            raise RateFloorHit(f"total rate {r!r} at tau={tau!r}")
        if r_model < 0:
            raise NegativeRate(f"total rate {r_model!r} < 0 at t={tau!r}")
        out = np.empty(d + 1)
        out[:d] = F(y, xd, tau)
        out[d] = 1.0
        out *= 1.0 / r
        return out

    return rhs


def chv_segment(model: PdmpModel, start: ChvState, s_target: float,
                config: SolverConfig = SolverConfig(),
                opts: ChvOptions = ChvOptions(),
                ) -> tuple[ChvState, SegmentOutcome, DenseSolution]:
    """Integrate the time-changed system over ``s in [0, s_target]``.

    Returns the end state, whether the jump or the horizon was reached
    first, and the dense solution in the ``s`` variable (last component is
    ``tau``). On ``jump_reached`` the end state is ``(X(T_n-), T_n)``.

    Raises
    ------
    RateFloorHit
        The rate fell to ``opts.rate_floor``; the next jump time is
        infinite and the caller must flow to the horizon in physical time.
    """
    if not s_target > 0:
        raise ValueError("s_target must be positive")
    d = model.dim_continuous
    xd = np.asarray(start.discrete)
    y0 = np.asarray(start.y, dtype=float)
    t_h = opts.t_horizon
    if not t_h > start.tau:
        raise ValueError("t_horizon must exceed the segment start time")
    r0 = float(model.total_rate(y0, xd, start.tau)) + opts.sample_rate
    if not r0 > opts.rate_floor:
        raise RateFloorHit(f"total rate {r0!r} at segment start")

    z0 = np.append(y0, start.tau)
    problem = OdeProblem(_time_changed_rhs(model, xd, opts), z0, 0.0, s_target)
    terminate = None
    if math.isfinite(t_h):
        def terminate(s, z):
            return z[d] > t_h
    sol = integrate(problem, config, terminate)

    if sol.terminated:
        s_hi = sol.ts[-1]
        s_lo = sol.ts[-2]
        s_h = find_root(sol, lambda z, s: z[d] - t_h, (s_lo, s_hi))
        # The interpolant is one order below the step; where dtau/ds is
        # large its tau error moves s_h noticeably, so the state at t_h is
        # recomputed by flowing F from the last accepted node instead.
        z_lo = sol.ys[-2]
        if z_lo[d] < t_h:
            y_h, _ = integrate_flow(model, z_lo[:d], xd, float(z_lo[d]), t_h, config)
        else:
            y_h = z_lo[:d].copy()
        # a jump within root tolerance of the horizon lands on it
        outcome = (SegmentOutcome.JUMP_REACHED
                   if s_target - s_h <= root_time_tolerance(s_target)
                   else SegmentOutcome.HORIZON_REACHED)
        return ChvState(y_h, t_h, xd), outcome, sol

    z = sol.endpoint_state
    tau = float(z[d])
    if math.isfinite(t_h) and t_h - tau <= root_time_tolerance(t_h - start.tau):
        tau = t_h
    return ChvState(z[:d], tau, xd), SegmentOutcome.JUMP_REACHED, sol


_COLLAPSE_RATIO = 1.5e-8  # ~sqrt(machine epsilon)


def _rate_collapsed(model, xc, xd, t, exc, lam) -> bool:
    if exc.y is None:
        return False
    d = model.dim_continuous
    r_start = float(model.total_rate(xc, xd, t)) + lam
    r_last = float(model.total_rate(exc.y[:d], xd, exc.y[d])) + lam
    return r_last <= _COLLAPSE_RATIO * r_start


def chv_simulate(model: PdmpModel, t_end: float = math.inf,
                 max_jumps: int = 1_000_000,
                 stream: ExpStream | None = None,
                 config: SolverConfig = SolverConfig(),
                 opts: ChvOptions = ChvOptions()) -> Trajectory:
    """Simulate ``model`` until ``t_end`` or ``max_jumps`` true jumps.

    ``F`` and ``R`` always receive the physical time ``tau(s)`` as their
    time argument, so time-dependent models need no special treatment.
    Jumps landing exactly on ``t_end`` are kept and close the trajectory.

    When ``opts.sample_rate`` is positive, each event is a phantom sample
    with probability ``lam / (R + lam)`` and leaves the state unchanged.
    """
    if not t_end > model.initial_time:
        raise ValueError("t_end must exceed the model's initial time")
    if max_jumps < 1:
        raise ValueError("max_jumps must be positive")
    stream = ExpStream(0) if stream is None else stream
    opts = replace(opts, t_horizon=t_end)
    lam = opts.sample_rate

    t = float(model.initial_time)
    xc = model.initial_continuous.copy()
    xd = model.initial_discrete.copy()
    records = []
    traj = Trajectory(records, t_end, model.name, stream.seed, Method.CHV,
                      meta={"atol": config.atol, "rtol": config.rtol,
                            "sample_rate": lam})
    n_true = 0

    while n_true < max_jumps:
        s_n = stream.exp()
        try:
            end, outcome, _ = chv_segment(model, ChvState(xc, t, xd), s_n,
                                          config, opts)
        except (RateFloorHit, StepUnderflow) as exc:
            # R collapsed along the flow (s-steps underflow first when it
            # decays like a power of s): the jump time is infinite.
            if isinstance(exc, StepUnderflow) and not _rate_collapsed(model, xc, xd, t, exc, lam):
                raise
            key = "rate_floor_hits" if isinstance(exc, RateFloorHit) else "s_step_underflows"
            traj.warnings[key] = traj.warnings.get(key, 0) + 1
            if not math.isfinite(t_end):
                traj.terminated = True
                break
            x_end, _ = integrate_flow(model, xc, xd, t, t_end, config)
            records.append(make_record(len(records) + 1, t_end, x_end, xd,
                                       x_end, xd, EventKind.HORIZON_END, s_n))
            break

        if outcome is SegmentOutcome.HORIZON_REACHED:
            records.append(make_record(len(records) + 1, t_end, end.y, xd,
                                       end.y, xd, EventKind.HORIZON_END, s_n))
            break

        x_minus, t = end.y, end.tau
        if lam > 0:
            r = model.rate(x_minus, xd, t)
            if stream.uniform() * (r + lam) < lam:
                records.append(make_record(len(records) + 1, t, x_minus, xd,
                                           x_minus, xd,
                                           EventKind.PHANTOM_SAMPLE, s_n))
                xc = x_minus
                if t >= t_end:
                    break
                continue

        new_xc, new_xd = model.jump_kernel(x_minus.copy(), xd.copy(), t,
                                           stream.uniform)
        records.append(make_record(len(records) + 1, t, x_minus, xd,
                                   new_xc, new_xd, EventKind.TRUE_JUMP, s_n))
        n_true += 1
        xc = np.array(new_xc, dtype=float)
        xd = np.array(new_xd, dtype=np.int64)
        if t >= t_end:
            break

    return traj


def chv_simulate_timedep(model: PdmpModel, t_end: float = math.inf,
                         max_jumps: int = 1_000_000,
                         stream: ExpStream | None = None,
                         config: SolverConfig = SolverConfig(),
                         opts: ChvOptions = ChvOptions()) -> Trajectory:
    """Same as :func:`chv_simulate`, for models whose ``F``/``R`` read ``t``.

    Kept as a separate entry point for readability at call sites; the
    time-changed system already carries ``tau`` as a state component.
    """
    return chv_simulate(model, t_end, max_jumps, stream, config, opts)
