"""Benchmark switching models, their closed-form jump oracles, error tables.

All three models are scalar switching systems ``X = (x_c, x_d)`` where the
single jump ``x_d -> x_d + 1`` flips the branch of the vector field:

* ``example1``: ``x_c' = a x_c`` with ``a = +100`` (x_d even) or ``-100``
  (x_d odd) and ``R = x_c``. On odd branches the next jump time can be
  infinite.
* ``example2``: ``x_c' = 10 x_c`` (even) or ``-3 x_c**2`` (odd), ``R = x_c``.
* ``example3``: ``x_c' = 3 x_c`` (even) or ``-4 x_c`` (odd) with the
  sigmoid rate ``R = 1 / (1 + exp(5 - x_c)) + 0.1``.

``poisson`` is a homogeneous Poisson process (``F = 0``, ``R = rate``).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StreamMismatch
from .fjm import RateBound
from .model import EventKind, ExpStream, PdmpModel, Trajectory

__all__ = [
    "example1_model",
    "example2_model",
    "example3_model",
    "poisson_model",
    "example3_bound",
    "MODELS",
    "get_model",
    "default_bound",
    "OracleTrajectory",
    "example1_oracle",
    "example2_oracle",
    "ErrorTable",
    "compare_to_oracle",
]

EXAMPLE1_RATE = 100.0


def _increment_discrete(xc, xd, t, uniform):
    return xc, xd + 1


def _rate_is_xc(xc, xd, t):
    return xc[0]


def example1_model() -> PdmpModel:
    def field(xc, xd, t):
        a = EXAMPLE1_RATE if xd[0] % 2 == 0 else -EXAMPLE1_RATE
        return a * xc

    return PdmpModel(field, _rate_is_xc, _increment_discrete,
                     initial_continuous=[1.0], initial_discrete=[0],
                     name="example1")


def example2_model() -> PdmpModel:
    def field(xc, xd, t):
        if xd[0] % 2 == 0:
            return 10.0 * xc
        return -3.0 * xc * xc

    return PdmpModel(field, _rate_is_xc, _increment_discrete,
                     initial_continuous=[1.0], initial_discrete=[0],
                     name="example2")


def example3_rate(xc, xd=None, t=None) -> float:
    z = xc[0] - 5.0
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z)) + 0.1
    e = math.exp(z)  # no overflow for very negative x_c
    return e / (1.0 + e) + 0.1


def example3_model() -> PdmpModel:
    def field(xc, xd, t):
        return (3.0 if xd[0] % 2 == 0 else -4.0) * xc

    return PdmpModel(field, example3_rate, _increment_discrete,
                     initial_continuous=[0.05], initial_discrete=[0],
                     name="example3")


def poisson_model(rate: float = 1.0) -> PdmpModel:
    def field(xc, xd, t):
        return np.zeros_like(xc)

    def total_rate(xc, xd, t):
        return rate

    return PdmpModel(field, total_rate, _increment_discrete,
                     initial_continuous=[0.0], initial_discrete=[0],
                     name="poisson")


def example3_bound() -> RateBound:
    """Per-segment bound: the global sup 1.1 while x_c grows, the current
    rate while it decays (R is increasing in x_c)."""
    def bound(xc, xd, t):
        if xd[0] % 2 == 0:
            return 1.1
        return example3_rate(xc)

    return RateBound.per_segment(bound)


MODELS = {
    "example1": example1_model,
    "example2": example2_model,
    "example3": example3_model,
    "poisson": poisson_model,
}

# Constant rejection bounds valid for every reachable state.
_DEFAULT_BOUNDS = {
    "example3": 1.1,
    "poisson": 1.0,
}


def get_model(name: str) -> PdmpModel:
    try:
        return MODELS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def default_bound(name: str) -> Optional[RateBound]:
    if name in _DEFAULT_BOUNDS:
        return RateBound.constant(_DEFAULT_BOUNDS[name])
    return None


# oracles ----------------------------------------------------------------

@dataclass
class OracleTrajectory:
    """Closed-form jump sequence. ``times[n-1]`` is ``T_n`` and ``xc[n-1]``
    is ``x_c(T_n)``; ``terminated`` means the next jump time is infinite."""

    example: int
    times: np.ndarray
    xc: np.ndarray
    xd: np.ndarray
    draws: np.ndarray
    terminated: bool = False
    seed: Optional[int] = None

    def __len__(self):
        return len(self.times)


def example1_oracle(stream: ExpStream, n_jumps: int,
                    x0: float = 1.0, xd0: int = 0, t0: float = 0.0) -> OracleTrajectory:
    if n_jumps < 1:
        raise ValueError("n_jumps must be >= 1")
    t, x, xd = t0, x0, xd0
    times, xs, xds, draws = [], [], [], []
    terminated = False
    for _ in range(n_jumps):
        s = stream.exp()
        a = EXAMPLE1_RATE if xd % 2 == 0 else -EXAMPLE1_RATE
        z = a * s / x
        if z <= -1.0:
            terminated = True
            break
        t = t + math.log1p(z) / a
        x = x + a * s
        xd += 1
        times.append(t)
        xs.append(x)
        xds.append(xd)
        draws.append(s)
    return OracleTrajectory(1, np.array(times), np.array(xs), np.array(xds),
                            np.array(draws), terminated, stream.seed)


def example2_oracle(stream: ExpStream, n_jumps: int,
                    x0: float = 1.0, xd0: int = 0, t0: float = 0.0) -> OracleTrajectory:
    if n_jumps < 1:
        raise ValueError("n_jumps must be >= 1")
    t, x, xd = t0, x0, xd0
    times, xs, xds, draws = [], [], [], []
    for _ in range(n_jumps):
        s = stream.exp()
        if xd % 2 == 0:
            t = t + math.log1p(10.0 * s / x) / 10.0
            x = x + 10.0 * s
        else:
            t = t + math.expm1(3.0 * s) / (3.0 * x)
            x = x * math.exp(-3.0 * s)
        xd += 1
        times.append(t)
        xs.append(x)
        xds.append(xd)
        draws.append(s)
    return OracleTrajectory(2, np.array(times), np.array(xs), np.array(xds),
                            np.array(draws), False, stream.seed)


# error tables -------------------------------------------------------------

ERROR_TABLE_HEADER = ["jump_index", "t_oracle", "t_numeric", "err_t", "err_x",
                      "method", "atol", "rtol"]


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        i = ERROR_TABLE_HEADER.index(name)
        return np.array([row[i] for row in self.rows])

    @property
    def max_err_t(self) -> float:
        return float(self.column("err_t").max()) if self.rows else 0.0

    @property
    def max_err_x(self) -> float:
        return float(self.column("err_x").max()) if self.rows else 0.0

    def to_csv(self, fh=None) -> str:
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(ERROR_TABLE_HEADER)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return out.getvalue() if fh is None else ""


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def compare_to_oracle(numeric: Trajectory, oracle: OracleTrajectory) -> ErrorTable:
    """Absolute jump-time and amplitude errors per common jump index."""
    if numeric.seed != oracle.seed:
        raise StreamMismatch(
            f"trajectory seed {numeric.seed!r} != oracle seed {oracle.seed!r}")
    jumps = numeric.events(EventKind.TRUE_JUMP)
    method = getattr(numeric.method, "value", numeric.method)
    atol = numeric.meta.get("atol", math.nan)
    rtol = numeric.meta.get("rtol", math.nan)
    table = ErrorTable()
    for n, (rec, t_o, x_o) in enumerate(zip(jumps, oracle.times, oracle.xc), start=1):
        table.rows.append([
            n, float(t_o), rec.time, abs(rec.time - float(t_o)),
            abs(float(rec.xc_after[0]) - float(x_o)), method,
            float(atol), float(rtol),
        ])
    return table
