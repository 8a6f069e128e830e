"""CSV/JSON writers and readers for trajectories, error tables and benches.

Floats are written with 17 significant digits so that every binary64
value survives a write/read round trip unchanged.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .model import EventKind, Method, Trajectory, make_record

__all__ = [
    "fmt_float",
    "provenance_line",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "trajectory_to_json",
    "write_error_table_csv",
    "write_bench_csv",
    "write_histogram_csv",
]

BENCH_HEADER = ["method", "realization", "seconds", "jumps", "fictitious", "seed"]
HISTOGRAM_HEADER = ["method", "bin_lo", "bin_hi", "count"]


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def _fmt(v):
    # shortest round-trip form keeps header values readable
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def provenance_line(meta: dict) -> str:
    return "# " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items())


def parse_provenance(line: str) -> dict:
    items = line.lstrip("#").split()
    return dict(item.split("=", 1) for item in items)


def _trajectory_header(d, m):
    cols = ["index", "kind", "time", "draw"]
    for tag in ("before", "after"):
        cols += [f"xc_{tag}_{i}" for i in range(d)]
        cols += [f"xd_{tag}_{i}" for i in range(m)]
    return cols


def write_trajectory_csv(traj: Trajectory, fh, meta: dict | None = None):
    if meta is not None:
        fh.write(provenance_line(meta) + "\n")
    if traj.records:
        d = len(traj.records[0].xc_before)
        m = len(traj.records[0].xd_before)
    else:
        d = m = 0
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(_trajectory_header(d, m))
    for r in traj.records:
        row = [r.index, r.kind.value, fmt_float(r.time), fmt_float(r.draw)]
        row += [fmt_float(v) for v in r.xc_before] + [int(v) for v in r.xd_before]
        row += [fmt_float(v) for v in r.xc_after] + [int(v) for v in r.xd_after]
        w.writerow(row)


def read_trajectory_csv(fh) -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`."""
    lines = fh.read().splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        meta = parse_provenance(lines[0])
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    d = sum(c.startswith("xc_before_") for c in header)
    m = sum(c.startswith("xd_before_") for c in header)
    records = []
    for row in reader:
        vals = row[4:]
        xc_b = [float(v) for v in vals[:d]]
        xd_b = [int(v) for v in vals[d:d + m]]
        xc_a = [float(v) for v in vals[d + m:2 * d + m]]
        xd_a = [int(v) for v in vals[2 * d + m:]]
        records.append(make_record(int(row[0]), float(row[2]), xc_b, xd_b,
                                   xc_a, xd_a, EventKind(row[1]), float(row[3])))
    seed = meta.get("seed")
    method = meta.get("method", "chv").replace("-", "_")
    return Trajectory(records, float(meta.get("t_end", "inf")),
                      meta.get("model", "custom"),
                      None if seed in (None, "None") else int(seed),
                      Method(method), meta=meta)


def trajectory_to_json(traj: Trajectory, meta: dict | None = None) -> str:
    def enc(x):
        x = float(x)
        return x if math.isfinite(x) else str(x)

    payload = {
        "meta": {k: (enc(v) if isinstance(v, float) else v)
                 for k, v in (meta or {}).items()},
        "model": traj.model_id,
        "method": traj.method.value,
        "seed": traj.seed,
        "t_end": enc(traj.t_end),
        "terminated": traj.terminated,
        "warnings": traj.warnings,
        "records": [
            {
                "index": r.index,
                "kind": r.kind.value,
                "time": enc(r.time),
                "draw": enc(r.draw),
                "xc_before": [enc(v) for v in r.xc_before],
                "xd_before": [int(v) for v in r.xd_before],
                "xc_after": [enc(v) for v in r.xc_after],
                "xd_after": [int(v) for v in r.xd_after],
            }
            for r in traj.records
        ],
    }
    # repr of a Python float round-trips exactly
    return json.dumps(payload, indent=1)


def write_error_table_csv(table, fh, meta: dict | None = None):
    if meta is not None:
        fh.write(provenance_line(meta) + "\n")
    table.to_csv(fh)


def write_bench_csv(results, fh, meta: dict | None = None):
    if meta is not None:
        fh.write(provenance_line(meta) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in results:
        w.writerow([r.method, r.realization, fmt_float(r.seconds), r.jumps,
                    r.fictitious, r.seed])


def write_histogram_csv(rows, fh, meta: dict | None = None):
    if meta is not None:
        fh.write(provenance_line(meta) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(HISTOGRAM_HEADER)
    for r in rows:
        w.writerow([r.method, fmt_float(r.bin_lo), fmt_float(r.bin_hi), r.count])
