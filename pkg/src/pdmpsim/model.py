"""PDMP data model: flow, total rate, jump kernel, trajectories, randomness."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NegativeRate, StreamExhausted
from .ode_core import OdeProblem, SolverConfig, integrate

__all__ = [
    "PdmpModel",
    "EventKind",
    "Method",
    "JumpRecord",
    "Trajectory",
    "ExpStream",
    "ValidationReport",
    "validate_model",
    "exp_draw",
    "integrate_flow",
    "make_record",
]

Uniform = Callable[[], float]


@dataclass(frozen=True)
class PdmpModel:
    """A piecewise deterministic Markov process.

    Parameters
    ----------
    vector_field : callable
        ``F(xc, xd, t)`` returning the time derivative of the continuous
        state.
    total_rate : callable
        ``R(xc, xd, t)``, the total jump intensity. Must be non-negative.
    jump_kernel : callable
        ``kernel(xc, xd, t, uniform)`` returning ``(new_xc, new_xd)``;
        ``uniform()`` yields uniform draws on [0, 1) from the realization's
        stream.
    initial_continuous, initial_discrete : array_like
    initial_time : float
    name : str
        Registry key; carried into trajectories as ``model_id``.
    """

    vector_field: Callable
    total_rate: Callable
    jump_kernel: Callable
    initial_continuous: np.ndarray
    initial_discrete: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    initial_time: float = 0.0
    name: str = "custom"
    dim_continuous: Optional[int] = None
    dim_discrete: Optional[int] = None

    def __post_init__(self):
        xc = np.atleast_1d(np.asarray(self.initial_continuous, dtype=float))
        xd = np.atleast_1d(np.asarray(self.initial_discrete, dtype=np.int64))
        object.__setattr__(self, "initial_continuous", xc)
        object.__setattr__(self, "initial_discrete", xd)
        if self.dim_continuous is None:
            object.__setattr__(self, "dim_continuous", xc.shape[0])
        if self.dim_discrete is None:
            object.__setattr__(self, "dim_discrete", xd.shape[0])
        if self.dim_continuous < 1:
            raise ValueError("dim_continuous must be positive")

    def rate(self, xc, xd, t) -> float:
        """Total rate with the sign check applied."""
        r = float(self.total_rate(xc, xd, t))
        if r < 0:
            raise NegativeRate(f"total rate {r!r} < 0 at t={t!r}")
        return r

    def flow_rhs(self, xd):
        """Physical-time right-hand side ``x' = F(x, xd, t)`` for fixed ``xd``."""
        F = self.vector_field

        def rhs(x, t):
            return F(x, xd, t)
        return rhs


class EventKind(str, enum.Enum):
    TRUE_JUMP = "true_jump"
    PHANTOM_SAMPLE = "phantom_sample"
    FICTITIOUS = "fictitious"
    HORIZON_END = "horizon_end"


class Method(str, enum.Enum):
    CHV = "chv"
    FJM = "fjm"
    TJM_EVENT = "tjm_event"


@dataclass(frozen=True)
class JumpRecord:
    index: int
    time: float
    xc_before: np.ndarray
    xd_before: np.ndarray
    xc_after: np.ndarray
    xd_after: np.ndarray
    kind: EventKind
    draw: float = math.nan  # unit exponential consumed by this event

    @property
    def state_before(self):
        return self.xc_before, self.xd_before

    @property
    def state_after(self):
        return self.xc_after, self.xd_after


@dataclass
class Trajectory:
    records: list
    t_end: float
    model_id: str
    seed: Optional[int]
    method: Method
    # next jump time was infinite and the horizon was infinite too
    terminated: bool = False
    warnings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def events(self, kind: EventKind):
        return [r for r in self.records if r.kind == kind]

    @property
    def jumps(self):
        return self.events(EventKind.TRUE_JUMP)

    @property
    def n_jumps(self) -> int:
        return sum(r.kind == EventKind.TRUE_JUMP for r in self.records)

    def jump_times(self) -> np.ndarray:
        return np.array([r.time for r in self.jumps])

    @property
    def final_state(self):
        if not self.records:
            return None
        return self.records[-1].state_after


class ExpStream:
    """Reproducible unit-exponential draws plus a separate uniform source.

    The exponential sequence depends only on the seed (and realization
    index), never on how many uniforms a kernel or acceptance test
    consumed, so different engines replay identical ``S_1, S_2, ...``.
    Realization ``k`` of a batch uses ``SeedSequence(seed, spawn_key=(k,))``
    feeding counter-based Philox generators.
    """

    _BLOCK = 256

    def __init__(self, seed: Optional[int] = 0, realization: Optional[int] = None,
                 values: Optional[Sequence[float]] = None):
        self.seed = seed
        self.realization = realization
        self.cursor = 0
        self._pos = 0
        spawn_key = () if realization is None else (int(realization),)
        ss = np.random.SeedSequence(0 if seed is None else int(seed),
                                    spawn_key=spawn_key)
        exp_ss, uni_ss = ss.spawn(2)
        self._uniform_gen = np.random.Generator(np.random.Philox(uni_ss))
        if values is not None:
            v = np.asarray(values, dtype=float)
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ValueError("exponential draws must be positive and finite")
            self._buffer = v
            self._exp_gen = None
        else:
            self._buffer = np.empty(0)
            self._exp_gen = np.random.Generator(np.random.Philox(exp_ss))

    @classmethod
    def for_realization(cls, base_seed: int, k: int) -> "ExpStream":
        return cls(base_seed, realization=k)

    @classmethod
    def from_values(cls, values, seed: Optional[int] = None) -> "ExpStream":
        return cls(seed, values=values)

    def replay(self) -> "ExpStream":
        """Fresh stream with the same seed, positioned at the first draw."""
        if self._exp_gen is None:
            return ExpStream(self.seed, self.realization, values=self._buffer)
        return ExpStream(self.seed, self.realization)

    def _refill(self):
        if self._exp_gen is None:
            raise StreamExhausted(
                f"fixed stream of {len(self._buffer)} draws exhausted")
        u = self._exp_gen.random(self._BLOCK)
        while np.any(u == 0.0):
            zero = u == 0.0
            u[zero] = self._exp_gen.random(int(zero.sum()))
        self._buffer = -np.log(u)
        self._pos = 0

    def exp(self) -> float:
        if self._pos >= len(self._buffer):
            self._refill()
        s = float(self._buffer[self._pos])
        self._pos += 1
        self.cursor += 1
        return s

    def take(self, n: int) -> np.ndarray:
        return np.array([self.exp() for _ in range(n)])

    def uniform(self) -> float:
        return float(self._uniform_gen.random())


def exp_draw(stream: ExpStream) -> float:
    """Next unit-exponential variate ``-log(U)``, ``U`` uniform on (0, 1)."""
    return stream.exp()


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)
    rate: float = math.nan

    @property
    def valid(self) -> bool:
        return not self.issues

    def codes(self):
        return {code for code, _ in self.issues}

    def add(self, code, message):
        self.issues.append((code, message))


def validate_model(model: PdmpModel) -> ValidationReport:
    """Evaluate F, R and the kernel at the initial state and report problems.

    Never raises; every failure lands in the report as ``(code, message)``
    with codes ``DimensionMismatch``, ``NegativeRate``, ``NonFinite`` or
    ``EvaluationError``.
    """
    report = ValidationReport()
    xc, xd, t = model.initial_continuous, model.initial_discrete, model.initial_time

    if xc.shape[0] != model.dim_continuous:
        report.add("DimensionMismatch",
                   f"initial continuous state has {xc.shape[0]} components, "
                   f"expected {model.dim_continuous}")
    if xd.shape[0] != model.dim_discrete:
        report.add("DimensionMismatch",
                   f"initial discrete state has {xd.shape[0]} components, "
                   f"expected {model.dim_discrete}")

    try:
        f = np.atleast_1d(np.asarray(model.vector_field(xc, xd, t), dtype=float))
        if f.shape != (model.dim_continuous,):
            report.add("DimensionMismatch",
                       f"vector field has shape {f.shape}, "
                       f"expected ({model.dim_continuous},)")
        elif not np.all(np.isfinite(f)):
            report.add("NonFinite", "vector field is not finite")
    except Exception as exc:  # report, never raise
        report.add("EvaluationError", f"vector field: {exc!r}")

    try:
        r = float(model.total_rate(xc, xd, t))
        report.rate = r
        if not math.isfinite(r):
            report.add("NonFinite", f"total rate is {r!r}")
        elif r < 0:
            report.add("NegativeRate", f"total rate {r!r} < 0")
    except Exception as exc:
        report.add("EvaluationError", f"total rate: {exc!r}")

    try:
        rng = np.random.default_rng(0)
        new_xc, new_xd = model.jump_kernel(xc.copy(), xd.copy(), t, rng.random)
        new_xc = np.atleast_1d(np.asarray(new_xc, dtype=float))
        new_xd = np.atleast_1d(np.asarray(new_xd))
        if new_xc.shape != (model.dim_continuous,) or new_xd.shape != (model.dim_discrete,):
            report.add("DimensionMismatch",
                       f"jump kernel returned shapes {new_xc.shape}, {new_xd.shape}")
        elif not np.all(np.isfinite(new_xc)):
            report.add("NonFinite", "jump kernel returned non-finite state")
    except Exception as exc:
        report.add("EvaluationError", f"jump kernel: {exc!r}")

    return report


def integrate_flow(model: PdmpModel, xc, xd, t0: float, t1: float,
                   config: SolverConfig = SolverConfig()):
    """Flow the continuous state in physical time from ``t0`` to ``t1``.

    Returns ``(state_at_t1, dense_solution)``; the dense solution is None
    when ``t1 == t0``.
    """
    xc = np.asarray(xc, dtype=float)
    if t1 == t0:
        return xc.copy(), None
    sol = integrate(OdeProblem(model.flow_rhs(xd), xc, t0, t1), config)
    return sol.endpoint_state, sol


def make_record(index, time, xc_before, xd_before, xc_after, xd_after, kind,
                draw=math.nan) -> JumpRecord:
    return JumpRecord(
        index=index,
        time=float(time),
        xc_before=np.array(xc_before, dtype=float),
        xd_before=np.array(xd_before, dtype=np.int64),
        xc_after=np.array(xc_after, dtype=float),
        xd_after=np.array(xd_after, dtype=np.int64),
        kind=EventKind(kind),
        draw=float(draw),
    )

