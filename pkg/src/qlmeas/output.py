"""Stable on-disk formats: trajectory/sweep CSVs and the run summary.

Every CSV starts with a schema tag line so downstream readers can refuse
files they do not understand.  Floats are written with repr, the
shortest decimal string that round-trips the exact binary value, which
makes re-runs byte-comparable without losing precision.

The summary is plain JSON with sorted keys, described by the bundled
summary.schema.json.
"""

from __future__ import annotations

import json

import numpy as np

TRAJECTORY_SCHEMA = "qlmeas-trajectory/1"
SWEEP_SCHEMA = "qlmeas-sweep/1"
SUMMARY_SCHEMA = "qlmeas-summary/1"

_CORR_COLS = [f"T_{i}{j}" for i in range(1, 4) for j in range(1, 4)]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_trajectory_csv(path, traj, epsilon=None, bloch_B=None,
                         corr=None) -> None:
    """Write one trajectory; optional mixture-coefficient column and,
    for local measurements on a pair, B-marginal and correlation
    columns."""
    cols = ["t", "n_x", "n_y", "n_z", "norm_n", "rate_n"]
    data = [traj.times, traj.bloch[:, 0], traj.bloch[:, 1],
            traj.bloch[:, 2], traj.norm, traj.rate]
    if epsilon is not None:
        cols.append("epsilon")
        data.append(np.asarray(epsilon))
    if bloch_B is not None:
        cols += ["nB_x", "nB_y", "nB_z"]
        data += [bloch_B[:, 0], bloch_B[:, 1], bloch_B[:, 2]]
        cols += _CORR_COLS
        flat = corr.reshape(len(traj.times), 9)
        data += [flat[:, k] for k in range(9)]
    for d in data:
        if len(d) != len(traj.times):
            raise ValueError("column length mismatch")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# schema: {TRAJECTORY_SCHEMA}\n")
        fh.write(",".join(cols) + "\n")
        for row in zip(*data):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_sweep_csv(path, rows) -> None:
    """Write sweep rows (list of dicts sharing the same keys)."""
    if not rows:
        raise ValueError("no sweep rows to write")
    cols = list(rows[0].keys())
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# schema: {SWEEP_SCHEMA}\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def write_summary(path, summary: dict) -> None:
    body = dict(summary)
    body["schema"] = SUMMARY_SCHEMA
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(_jsonable(body), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_trajectory_csv(path):
    """Read back a trajectory CSV into (columns, array); schema checked."""
    with open(path, encoding="ascii") as fh:
        tag = fh.readline().strip()
        if tag != f"# schema: {TRAJECTORY_SCHEMA}":
            raise ValueError(f"unexpected schema line {tag!r}")
        cols = fh.readline().strip().split(",")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.shape[1] != len(cols):
        raise ValueError("column count mismatch")
    return cols, body
