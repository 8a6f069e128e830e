"""Adaptive Dormand-Prince 5(4) integrator with dense output and root finding.

The stepper is deliberately small: one explicit embedded pair, a mixed
absolute/relative RMS error norm, a PI step-size controller and the free
4th-order continuous extension of the pair. Implicit methods are not
provided; stiff problems are integrated at the cost of small steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BracketInvalid,
    MaxStepsExceeded,
    NoSignChange,
    NonFiniteDerivative,
    OutOfSpan,
    StepUnderflow,
)

__all__ = [
    "OdeProblem",
    "SolverConfig",
    "DenseSolution",
    "integrate",
    "interpolate",
    "find_root",
]

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order weights minus embedded 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])
# Continuous extension: y(t0 + th*h) = y0 + h * K^T @ (_P @ [th, th^2, th^3, th^4])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_ORDER = 5
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_PI_BETA = 0.04
_PI_EXPO = 1.0 / _ORDER - 0.75 * _PI_BETA


@dataclass(frozen=True)
class OdeProblem:
    """Initial value problem ``x' = rhs(x, t)`` on ``[t_start, t_end]``.

    ``t_end`` may be ``inf`` when :func:`integrate` is given a ``terminate``
    callback that eventually stops the integration.
    """

    rhs: Callable[[np.ndarray, float], np.ndarray]
    initial_state: np.ndarray
    t_start: float
    t_end: float

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.initial_state, dtype=float))
        object.__setattr__(self, "initial_state", x0)
        if not self.t_end > self.t_start:
            raise ValueError(
                f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")

    @property
    def dimension(self) -> int:
        return self.initial_state.shape[0]


@dataclass(frozen=True)
class SolverConfig:
    atol: float = 1e-10
    rtol: float = 1e-10
    h_init: Optional[float] = None  # None selects the step automatically
    h_min: float = 0.0
    h_max: float = math.inf
    max_steps: int = 500_000

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("atol and rtol must be positive")
        if self.h_init is not None and not self.h_init > 0:
            raise ValueError("h_init must be positive or None")
        if self.h_min < 0 or not self.h_max > 0 or self.h_min > self.h_max:
            raise ValueError("need 0 <= h_min <= h_max and h_max > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


class DenseSolution:
    """Piecewise polynomial interpolant produced by :func:`integrate`.

    Segment ``i`` covers ``[ts[i], ts[i+1]]``. Interpolation at a step
    node returns the stored step state exactly.
    """

    def __init__(self, ts, ys, ks, step_count, rejected_step_count,
                 terminated=False):
        self.ts = np.asarray(ts, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self._ks = ks
        self.step_count = step_count
        self.rejected_step_count = rejected_step_count
        # True when a terminate callback stopped the integration early
        self.terminated = terminated

    @property
    def t_start(self) -> float:
        return float(self.ts[0])

    @property
    def t_reached(self) -> float:
        return float(self.ts[-1])

    @property
    def endpoint_state(self) -> np.ndarray:
        return self.ys[-1].copy()

    @property
    def segments(self):
        """List of ``(t_left, t_right, coefficients)``.

        ``coefficients`` has shape ``(dimension, 4)``; the state at
        ``t_left + th * h`` is ``y_left + coefficients @ [th, th^2, th^3, th^4]``.
        """
        return [
            (self.ts[i], self.ts[i + 1], self._coefficients(i))
            for i in range(len(self.ts) - 1)
        ]

    def _coefficients(self, i):
        h = self.ts[i + 1] - self.ts[i]
        return h * (self._ks[i].T @ _P)

    def segment_index(self, t: float) -> int:
        if not self.ts[0] <= t <= self.ts[-1]:
            raise OutOfSpan(
                f"t={t!r} outside integrated span "
                f"[{self.ts[0]!r}, {self.ts[-1]!r}]")
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        return min(i, len(self.ts) - 2)

    def __call__(self, t: float) -> np.ndarray:
        i = self.segment_index(t)
        t0, t1 = self.ts[i], self.ts[i + 1]
        if t == t0:
            return self.ys[i].copy()
        if t == t1:
            return self.ys[i + 1].copy()
        th = (t - t0) / (t1 - t0)
        powers = np.array([th, th * th, th ** 3, th ** 4])
        return self.ys[i] + self._coefficients(i) @ powers


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / v.shape[0])


def _eval(rhs, x, t):
    f = np.asarray(rhs(x, t), dtype=float)
    if f.shape != x.shape:
        raise ValueError(
            f"rhs returned shape {f.shape}, expected {x.shape}")
    _check_finite(f, t)
    return f


def _check_finite(f, t):
    # the sum is non-finite iff some entry is (or entries overflow ~1e308)
    if not math.isfinite(_sum(f, axis=None)):
        raise NonFiniteDerivative(f"non-finite derivative near t={t!r}")


_sum = np.add.reduce


def _initial_step(rhs, t0, y0, f0, direction_span, config):
    sc = config.atol + config.rtol * np.abs(y0)
    d0 = _rms(y0 / sc)
    d1 = _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = _eval(rhs, y0 + h0 * f0, t0 + h0)
    d2 = _rms((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / _ORDER)
    return min(100 * h0, h1, config.h_max, direction_span)


def integrate(problem: OdeProblem, config: SolverConfig = SolverConfig(),
              terminate: Optional[Callable[[float, np.ndarray], bool]] = None,
              ) -> DenseSolution:
    """Integrate ``problem`` with adaptive Dormand-Prince 5(4) steps.

    Parameters
    ----------
    problem : OdeProblem
    config : SolverConfig
    terminate : callable, optional
        ``terminate(t, y)`` is evaluated after every accepted step; a true
        return stops the integration there and marks the solution
        ``terminated``.

    Raises
    ------
    MaxStepsExceeded, StepUnderflow, NonFiniteDerivative
    """
    rhs = problem.rhs
    t = float(problem.t_start)
    t_end = float(problem.t_end)
    y = problem.initial_state.copy()
    n = y.shape[0]
    atol, rtol = config.atol, config.rtol

    f = _eval(rhs, y, t)
    if config.h_init is not None:
        h = min(config.h_init, config.h_max, t_end - t)
    else:
        h = _initial_step(rhs, t, y, f, t_end - t, config)

    ts = [t]
    ys = [y]
    ks = []
    K = np.empty((7, n))
    accepted = rejected = 0
    err_old = 1e-4
    last_rejected = False
    terminated = False

    while t < t_end:
        if accepted + rejected >= config.max_steps:
            raise MaxStepsExceeded(
                f"{config.max_steps} steps reached at t={t!r}", t, y)
        h_floor = max(config.h_min, 10 * math.ulp(t))
        if h < h_floor:
            raise StepUnderflow(f"step {h!r} below minimum at t={t!r}", t, y)
        last_step = t + h >= t_end
        if last_step:
            h = t_end - t

        K[0] = f
        for i in range(1, 7):
            K[i] = rhs(y + _A[i] @ K[:i] * h, t + _C[i] * h)
        _check_finite(K, t)
        y_new = y + _B @ K * h
        t_new = t_end if last_step else t + h

        scaled = (_E @ K) / (atol + rtol * np.maximum(np.abs(y), np.abs(y_new)))
        err = h * _rms(scaled)
        if not math.isfinite(err):
            err = 1e10

        if err <= 1.0:
            fac11 = err ** _PI_EXPO
            fac = fac11 / err_old ** _PI_BETA / _SAFETY
            fac = min(1.0 / _FAC_MIN, max(1.0 / _FAC_MAX, fac))
            h_new = h / fac if err > 0 else h * _FAC_MAX
            if last_rejected:
                h_new = min(h_new, h)
            err_old = max(err, 1e-4)
            accepted += 1
            ks.append(K.copy())
            t, y = t_new, y_new
            f = K[6]
            ts.append(t)
            ys.append(y)
            last_rejected = False
            h = min(h_new, config.h_max)
            if terminate is not None and terminate(t, y):
                terminated = True
                break
        else:
            rejected += 1
            if h <= config.h_min:
                raise StepUnderflow(
                    f"error test failing at minimum step {h!r}, t={t!r}", t, y)
            fac = min(1.0 / _FAC_MIN, err ** _PI_EXPO / _SAFETY)
            h = max(h / fac, config.h_min)
            last_rejected = True

    return DenseSolution(ts, ys, ks, accepted, rejected, terminated)


def interpolate(sol: DenseSolution, t: float) -> np.ndarray:
    """State of ``sol`` at time ``t``; raises :class:`OutOfSpan` outside it."""
    return sol(t)


def root_time_tolerance(span: float) -> float:
    return max(1e-14, 1e-12 * abs(span))


def find_root(sol: DenseSolution,
              g: Callable[[np.ndarray, float], float],
              bracket: Sequence[float]) -> float:
    """Leftmost sign change of ``g(sol(t), t)`` inside ``bracket``.

    Segments are scanned left to right using ``g`` at the step nodes; the
    first segment with a sign change is refined by Brent's method on the
    dense interpolant.
    """
    t_lo, t_hi = float(bracket[0]), float(bracket[1])
    if not (t_lo < t_hi):
        raise BracketInvalid(f"empty bracket ({t_lo!r}, {t_hi!r})")
    if t_lo < sol.ts[0] or t_hi > sol.ts[-1]:
        raise BracketInvalid(
            f"bracket ({t_lo!r}, {t_hi!r}) outside solution span")
    xtol = root_time_tolerance(t_hi - t_lo)

    def gt(t):
        return float(g(sol(t), t))

    nodes = sol.ts[(sol.ts > t_lo) & (sol.ts < t_hi)]
    grid = np.concatenate(([t_lo], nodes, [t_hi]))
    a = grid[0]
    ga = gt(a)
    if ga == 0.0:
        return a
    for b in grid[1:]:
        gb = gt(b)
        if gb == 0.0:
            return float(b)
        if (ga < 0) != (gb < 0):
            root = brentq(gt, a, b, xtol=xtol, maxiter=200)
            return min(max(root, t_lo), t_hi)
        a, ga = b, gb
    raise NoSignChange(f"g keeps its sign on [{t_lo!r}, {t_hi!r}]")
