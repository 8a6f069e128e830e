"""Command-line front end: ``simulate``, ``compare`` and ``bench``.

Exit codes: 0 on success, 1 when an engine raises (one ``ErrorName: msg``
line on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
from pathlib import Path

from . import serialize
from .bench import histogram, normalize_method, run_bench, simulate
from .errors import PdmpError
from .examples import (MODELS, compare_to_oracle, default_bound,
                       example1_model, example1_oracle, example2_model,
                       example2_oracle, ErrorTable)
from .fjm import RateBound
from .model import ExpStream
from .ode_core import SolverConfig

__all__ = ["main", "build_parser"]


class _UsageError(Exception):
    pass


def _method(text):
    try:
        return normalize_method(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _method_list(text):
    return [_method(m) for m in text.split(",") if m.strip()]


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (default: $PDMP_SEED, else 0)")
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--rtol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdmpsim",
                                     description="Exact simulation of PDMPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one trajectory")
    p.add_argument("--model", required=True, choices=sorted(MODELS))
    p.add_argument("--method", type=_method, default="chv",
                   help="chv, fjm or tjm-event")
    stop = p.add_mutually_exclusive_group()
    stop.add_argument("--t-end", type=float, default=None)
    stop.add_argument("--n-jumps", type=_positive_int, default=None)
    p.add_argument("--sample-rate", type=float, default=0.0,
                   help="rate of extra flow samples (chv only)")
    p.add_argument("--bound", type=float, default=None,
                   help="constant dominating rate for fjm")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p)

    p = sub.add_parser("compare", help="compare engines against a closed form")
    p.add_argument("--example", required=True, choices=("1", "2"))
    p.add_argument("--jumps", type=_positive_int, default=20)
    p.add_argument("--methods", type=_method_list, default=["chv", "tjm_event"])
    p.add_argument("--out", default=None)
    _add_common(p)

    p = sub.add_parser("bench", help="time engines over many realizations")
    p.add_argument("--model", required=True, choices=sorted(MODELS))
    p.add_argument("--methods", type=_method_list, default=["chv", "fjm"])
    p.add_argument("--jumps", type=_positive_int, default=1)
    p.add_argument("--realizations", type=_positive_int, default=100)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--bound", type=float, default=None)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out-dir", default=".")
    _add_common(p)
    return parser


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("PDMP_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise _UsageError(f"PDMP_SEED must be an integer, got {env!r}")


def _bound_for(model_name, value):
    if value is not None:
        if not value > 0:
            raise _UsageError("--bound must be positive")
        return RateBound.constant(value)
    bound = default_bound(model_name)
    if bound is None:
        raise _UsageError(f"fjm on {model_name} needs --bound")
    return bound


def _announce(meta):
    print(serialize.provenance_line(meta), file=sys.stderr)


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _cmd_simulate(args):
    seed = _resolve_seed(args.seed)
    config = SolverConfig(atol=args.atol, rtol=args.rtol)
    bound = _bound_for(args.model, args.bound) if args.method == "fjm" else None
    if args.t_end is None and args.n_jumps is None:
        raise _UsageError("one of --t-end or --n-jumps is required")
    t_end = math.inf if args.t_end is None else args.t_end
    meta = {"command": "simulate", "model": args.model,
            "method": args.method.replace("_", "-"), "seed": seed,
            "atol": args.atol, "rtol": args.rtol, "t_end": t_end}
    if args.bound is not None:
        meta["bound"] = args.bound
    _announce(meta)
    traj = simulate(args.method, MODELS[args.model](), ExpStream(seed), config,
                    t_end=t_end, n_jumps=args.n_jumps, bound=bound,
                    sample_rate=args.sample_rate)
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(serialize.trajectory_to_json(traj, meta) + "\n")
        else:
            serialize.write_trajectory_csv(traj, fh, meta)
    return 0


def _cmd_compare(args):
    seed = _resolve_seed(args.seed)
    config = SolverConfig(atol=args.atol, rtol=args.rtol)
    if args.example == "1":
        model, oracle_fn = example1_model(), example1_oracle
    else:
        model, oracle_fn = example2_model(), example2_oracle
    meta = {"command": "compare", "model": model.name,
            "method": ",".join(m.replace("_", "-") for m in args.methods),
            "seed": seed, "atol": args.atol, "rtol": args.rtol}
    _announce(meta)
    oracle = oracle_fn(ExpStream(seed), args.jumps)
    table = ErrorTable()
    if len(oracle):
        for method in args.methods:
            traj = simulate(method, model, ExpStream(seed), config,
                            n_jumps=len(oracle))
            table.rows.extend(compare_to_oracle(traj, oracle).rows)
    with _output(args.out) as fh:
        serialize.write_error_table_csv(table, fh, meta)
    return 0


def _cmd_bench(args):
    seed = _resolve_seed(args.seed)
    if args.bins < 2:
        raise _UsageError("--bins must be >= 2")
    config = SolverConfig(atol=args.atol, rtol=args.rtol)
    bound = _bound_for(args.model, args.bound) if "fjm" in args.methods else None
    meta = {"command": "bench", "model": args.model,
            "method": ",".join(m.replace("_", "-") for m in args.methods),
            "seed": seed, "atol": args.atol, "rtol": args.rtol,
            "jumps": args.jumps, "realizations": args.realizations}
    _announce(meta)
    results = run_bench(MODELS[args.model](), args.methods, args.jumps,
                        args.realizations, seed, config, bound, n_jobs=args.jobs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    failed = [r for r in results if r.error is not None]
    rows = histogram(results, args.bins) if len(failed) < len(results) else []
    for method in args.methods:
        tag = method.replace("_", "-")
        m_meta = dict(meta, method=tag)
        with open(out_dir / f"bench_{tag}.csv", "w", newline="") as fh:
            serialize.write_bench_csv([r for r in results if r.method == method],
                                      fh, m_meta)
        with open(out_dir / f"histogram_{tag}.csv", "w", newline="") as fh:
            serialize.write_histogram_csv([r for r in rows if r.method == method],
                                          fh, m_meta)
    for r in failed:
        print(f"warning: {r.method} realization {r.realization} failed: {r.error}",
              file=sys.stderr)
    return 0


_COMMANDS = {"simulate": _cmd_simulate, "compare": _cmd_compare,
             "bench": _cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pdmpsim: error: {exc}", file=sys.stderr)
        return 2
    except PdmpError as exc:
        msg = " ".join(str(exc).split())
        print(f"{type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
