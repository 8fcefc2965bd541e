import json

import numpy as np
import pytest

from qlmeas.dynamics import Trajectory
from qlmeas.output import (SUMMARY_SCHEMA, SWEEP_SCHEMA, TRAJECTORY_SCHEMA,
                           read_trajectory_csv, write_summary,
                           write_sweep_csv, write_trajectory_csv)


def _traj(n=5, seed=0):
    rng = np.random.default_rng(seed)
    times = np.sort(rng.uniform(0, 1e-5, n))
    bloch = rng.uniform(-0.5, 0.5, (n, 3))
    return Trajectory(times=times, bloch=bloch,
                      norm=np.linalg.norm(bloch, axis=1),
                      rate=rng.uniform(0, 1e9, n),
                      crossings=(), branch=1, meta={})


def test_trajectory_round_trips_exactly(tmp_path):
    traj = _traj(n=9, seed=3)
    p = tmp_path / "t.csv"
    write_trajectory_csv(p, traj)
    cols, body = read_trajectory_csv(p)
    assert cols == ["t", "n_x", "n_y", "n_z", "norm_n", "rate_n"]
    # repr round-trips every float bit for bit
    np.testing.assert_array_equal(body[:, 0], traj.times)
    np.testing.assert_array_equal(body[:, 1:4], traj.bloch)
    np.testing.assert_array_equal(body[:, 4], traj.norm)
    np.testing.assert_array_equal(body[:, 5], traj.rate)


def test_trajectory_schema_tag(tmp_path):
    traj = _traj()
    p = tmp_path / "t.csv"
    write_trajectory_csv(p, traj)
    first = p.read_text().splitlines()[0]
    assert first == f"# schema: {TRAJECTORY_SCHEMA}"
    p.write_text(p.read_text().replace(TRAJECTORY_SCHEMA, "bogus/9"))
    with pytest.raises(ValueError):
        read_trajectory_csv(p)


def test_trajectory_optional_columns(tmp_path):
    n = 6
    traj = _traj(n=n, seed=1)
    eps = np.linspace(0.2, 0.4, n)
    bloch_b = np.full((n, 3), 0.1)
    corr = np.arange(9 * n, dtype=float).reshape(n, 3, 3) / 100.0
    p = tmp_path / "t.csv"
    write_trajectory_csv(p, traj, epsilon=eps, bloch_B=bloch_b, corr=corr)
    cols, body = read_trajectory_csv(p)
    assert cols[6] == "epsilon"
    assert cols[7:10] == ["nB_x", "nB_y", "nB_z"]
    assert cols[10] == "T_11" and cols[-1] == "T_33"
    np.testing.assert_array_equal(body[:, 6], eps)
    np.testing.assert_array_equal(body[:, 7:10], bloch_b)
    np.testing.assert_array_equal(body[:, 10:], corr.reshape(n, 9))


def test_trajectory_length_mismatch(tmp_path):
    traj = _traj(n=5)
    with pytest.raises(ValueError):
        write_trajectory_csv(tmp_path / "t.csv", traj,
                             epsilon=np.zeros(4))


def test_sweep_rows(tmp_path):
    rows = [
        {"index": 0, "g0": 1e7, "converged": True, "status": "ok",
         "detail": ""},
        {"index": 1, "g0": 2.5e8, "converged": False, "status": "error",
         "detail": "step limit"},
    ]
    p = tmp_path / "s.csv"
    write_sweep_csv(p, rows)
    lines = p.read_text().splitlines()
    assert lines[0] == f"# schema: {SWEEP_SCHEMA}"
    assert lines[1] == "index,g0,converged,status,detail"
    assert lines[2] == "0,10000000.0,true,ok,"
    assert lines[3] == "1,250000000.0,false,error,step limit"


def test_sweep_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_sweep_csv(tmp_path / "s.csv", [])


def test_summary_json(tmp_path):
    p = tmp_path / "summary.json"
    write_summary(p, {
        "kind": "run",
        "result": {"final_bloch": np.array([0.1, 0.2, 0.3]),
                   "converged": np.bool_(True),
                   "n": np.int64(7),
                   "err": np.float64(1.5e-8)},
    })
    doc = json.loads(p.read_text())
    assert doc["schema"] == SUMMARY_SCHEMA
    assert doc["result"]["final_bloch"] == [0.1, 0.2, 0.3]
    assert doc["result"]["converged"] is True
    assert doc["result"]["n"] == 7
    assert doc["result"]["err"] == 1.5e-8
    # keys are sorted so reruns diff cleanly
    assert list(doc) == sorted(doc)
    raw = p.read_text()
    assert raw.index('"kind"') < raw.index('"result"')


def test_summary_does_not_mutate_input(tmp_path):
    body = {"kind": "run"}
    write_summary(tmp_path / "s.json", body)
    assert "schema" not in body
