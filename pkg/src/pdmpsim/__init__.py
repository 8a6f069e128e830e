"""Exact simulation of piecewise deterministic Markov processes.

Three engines share one model interface and one random stream layout:

* :func:`chv_simulate` integrates the flow in a rescaled time in which
  every inter-jump interval has the length of its exponential draw, so
  each jump lands on an ODE step endpoint.
* :func:`fjm_simulate` thins a dominating Poisson process.
* :func:`tjm_event_simulate` locates each jump as the crossing of the
  accumulated rate with its exponential draw (event detection).
"""

from .bench import BenchResult, HistogramRow, histogram, run_bench, simulate
from .chv import ChvOptions, ChvState, chv_segment, chv_simulate, chv_simulate_timedep
from .errors import *  # noqa: F401,F403
from .examples import (MODELS, ErrorTable, OracleTrajectory, compare_to_oracle,
                       default_bound, example1_model, example1_oracle,
                       example2_model, example2_oracle, example3_bound,
                       example3_model, example3_rate, get_model, poisson_model)
from .fjm import RateBound, count_fictitious, fjm_simulate
from .model import (EventKind, ExpStream, JumpRecord, Method, PdmpModel,
                    Trajectory, ValidationReport, exp_draw, validate_model)
from .ode_core import (DenseSolution, OdeProblem, SolverConfig, find_root,
                       integrate, interpolate)
from .tjm import locate_jump_physical_time, tjm_event_simulate

__version__ = "0.1.0"
