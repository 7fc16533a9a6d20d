#!/usr/bin/env python3
"""Benchmark the flow kernels: numba-compiled vs pure-Python fallback.

Runs a representative orbit workload (period detection, loop sampling and a
second-order action evaluation) in the current mode, then re-executes itself
with BSWKB_NUMBA flipped and prints the comparison.  Usage:

    python3 benchmarks/bench_flow.py            # both modes
    python3 benchmarks/bench_flow.py --single   # current mode only
"""

import json
import os
import subprocess
import sys
import time


def workload():
    from bswkb.actions import action_series
    from bswkb.orbits import find_orbit
    from bswkb.symbols import make_model

    model = make_model("quartic-well", p1=[[1.0, 1, 0]])
    # warm-up triggers jit compilation when numba is active
    find_orbit(model, 1.0, n_samples=512)

    t0 = time.perf_counter()
    orbits = [find_orbit(model, E, n_samples=2048) for E in (0.6, 1.0, 1.6)]
    t_orbit = time.perf_counter() - t0

    t0 = time.perf_counter()
    action_series(model, 1.0)
    t_series = time.perf_counter() - t0

    return {"orbits_3x2048": t_orbit, "action_series_order2": t_series,
            "period_sample": orbits[0].period}


def run_current():
    from bswkb import flow

    res = workload()
    res["numba"] = flow.NUMBA_ENABLED
    return res


def main():
    if "--single" in sys.argv or os.environ.get("_BSWKB_BENCH_CHILD"):
        res = run_current()
        print(json.dumps(res))
        return
    here = run_current()
    env = dict(os.environ)
    env["BSWKB_NUMBA"] = "0" if here["numba"] else "1"
    env["_BSWKB_BENCH_CHILD"] = "1"
    out = subprocess.run([sys.executable, os.path.abspath(__file__)],
                         env=env, capture_output=True, text=True, check=True)
    other = json.loads(out.stdout.strip().splitlines()[-1])
    fast, slow = (here, other) if here["numba"] else (other, here)
    print(f"{'workload':<28}{'numba':>12}{'fallback':>12}{'speedup':>10}")
    for key in ("orbits_3x2048", "action_series_order2"):
        s = slow[key] / fast[key]
        print(f"{key:<28}{fast[key]:>11.3f}s{slow[key]:>11.3f}s{s:>9.1f}x")
    assert abs(fast["period_sample"] - slow["period_sample"]) < 1e-12, \
        "modes disagree on the computed period"
    print("identical results across modes (period check passed)")


if __name__ == "__main__":
    main()
