"""Time the compiled kernels against the plain-Python fallback.

Each backend runs in its own subprocess because the backend choice is
fixed at import time (QLMEAS_DISABLE_NUMBA).  The workload is a short
pulsed-measurement scenario on all three integration routes, scaled
down so the fallback finishes in seconds.

    python benchmarks/bench_kernels.py [--t-end 2e-5] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import json, sys, time
import numpy as np
from qlmeas.dynamics import (IntegrationControls, evolve_density,
                             integrate_bloch, integrate_propagator)
from qlmeas.generators import DrivingGenerator, InvertedMorse, Observable
from qlmeas.kernels import HAS_NUMBA

t_end, repeat = float(sys.argv[1]), int(sys.argv[2])
obs = Observable.from_polar(1e9, np.pi / 3, np.pi / 6)
gen = DrivingGenerator.from_polar(+1, np.pi / 6, -np.pi / 3,
                                  InvertedMorse(1e9, 1e5))
ctl = IntegrationControls(t_end=t_end, output_points=50)
n0 = np.array([-0.5, 0.0, -0.5])
rho0 = np.array([[0.25, 0.0], [0.0, 0.75]], dtype=complex)

runs = {
    "bloch": lambda: integrate_bloch(n0, obs, gen, ctl),
    "density": lambda: evolve_density(rho0, obs, gen, ctl),
    "propagator": lambda: integrate_propagator(obs, gen, ctl),
}
out = {"numba": HAS_NUMBA, "timings": {}}
for name, fn in runs.items():
    res = fn()  # warm-up: numba compilation / cache load
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    meta = getattr(res, "meta", {})
    out["timings"][name] = {"seconds": best,
                            "n_rhs": int(meta.get("n_rhs", 0))}
print(json.dumps(out))
"""


def run_backend(disable: bool, t_end: float, repeat: int) -> dict:
    env = dict(os.environ)
    env["QLMEAS_DISABLE_NUMBA"] = "1" if disable else ""
    proc = subprocess.run(
        [sys.executable, "-c", _CHILD, str(t_end), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=2e-5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    fast = run_backend(False, args.t_end, args.repeat)
    slow = run_backend(True, args.t_end, args.repeat)
    if not fast["numba"]:
        print("note: numba unavailable, comparing fallback to itself")

    print(f"{'route':<12} {'numba [s]':>12} {'python [s]':>12} "
          f"{'speedup':>9}")
    for name in ("bloch", "density", "propagator"):
        a = fast["timings"][name]["seconds"]
        b = slow["timings"][name]["seconds"]
        print(f"{name:<12} {a:>12.4f} {b:>12.4f} {b / a:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
