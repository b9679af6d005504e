"""Benchmark the compiled (numba) kernels against the pure numpy path.

Runs representative hot paths under the current backend, then re-executes
itself in a subprocess with LEOCLUSTER_DISABLE_NUMBA=1 and prints a
side-by-side table plus estimate agreement.

Usage: python benchmarks/compare_backends.py [--trials N]
"""

import argparse
import json
import os
import subprocess
import sys
import time
import warnings

import numpy as np


def workloads(trials):
    warnings.simplefilter("ignore")
    import leocluster as lc
    from leocluster import channel, geometry, montecarlo, SampleStream

    s = lc.default_scenario()
    results = {"backend": lc.BACKEND}

    grid = np.linspace(0.0, 12.0, 20001)
    t0 = time.perf_counter()
    cdf = channel.sr_cdf(grid, s.fading)
    results["fading_cdf_20k"] = (time.perf_counter() - t0, float(cdf[-1]))

    plan = montecarlo.SimulationPlan(s, trials, 42)
    t0 = time.perf_counter()
    est = montecarlo.simulate_outage(plan)
    results["outage_sim"] = (time.perf_counter() - t0, est.value)

    t0 = time.perf_counter()
    est = montecarlo.simulate_rate(plan)
    results["rate_sim"] = (time.perf_counter() - t0, est.value)

    n_angles = max(trials // 10, 1000)
    t0 = time.perf_counter()
    th = geometry.sample_nearest_leader_angle(SampleStream(7, 3), s.cfg, n_angles)
    results["nearest_leader_sampling"] = (time.perf_counter() - t0, float(th.mean()))
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=200_000)
    parser.add_argument("--emit-json", action="store_true")
    args = parser.parse_args()

    mine = workloads(args.trials)
    if args.emit_json:
        json.dump(mine, sys.stdout)
        return

    env = dict(os.environ, LEOCLUSTER_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--trials",
         str(args.trials), "--emit-json"],
        capture_output=True, text=True, env=env, check=True)
    other = json.loads(out.stdout)

    # warm pass under this backend so JIT compilation is excluded
    mine = workloads(args.trials)

    print(f"\n{'workload':<28} {mine['backend']:>12} {other['backend']:>12} "
          f"{'speedup':>9}  value agreement")
    for key in ("fading_cdf_20k", "outage_sim", "rate_sim",
                "nearest_leader_sampling"):
        t_a, v_a = mine[key]
        t_b, v_b = other[key]
        rel = abs(v_a - v_b) / max(abs(v_a), 1e-300)
        print(f"{key:<28} {t_a:>10.3f}s {t_b:>10.3f}s {t_b / t_a:>8.1f}x"
              f"  rel diff {rel:.2e}")


if __name__ == "__main__":
    main()
