#!/usr/bin/env python3
"""Benchmark the hot kernels: numba JIT vs the pure interpreted fallback.

Times the savings construction, one tabu-search block, and the intra-route
pass on a synthetic 100-customer instance.  Run one mode directly, or
``--compare`` to spawn both modes in subprocesses and print the speedups
side by side (the mode flag must be set before the first import, hence the
subprocesses).

Usage:
    python benchmarks/bench_kernels.py [--customers N] [--iterations I]
    python benchmarks/bench_kernels.py --compare
"""

import argparse
import json
import os
import subprocess
import sys
import time

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(HERE, "..", "src"))
sys.path.insert(0, os.path.join(HERE, "..", "tests"))


def run_benchmarks(n_customers: int, iterations: int) -> dict:
    import numpy as np
    from fleetroute._jit import USE_NUMBA
    from fleetroute.model import ControlParams
    from fleetroute.construct import (assign_vehicles, init_singleton_routes,
                                      run_savings_construction)
    from fleetroute.eliminate import eliminate_routes
    from fleetroute.intra import improve_solution
    from fleetroute.tabu import run_tabu
    from conftest import make_instance

    inst = make_instance(n=n_customers, seed=7, n_vehicles=8,
                         demand_weight=(40.0, 200.0), window_span=(120.0, 600.0),
                         sdvrp_fraction=0.15, area=40.0)
    params = ControlParams().resolved(inst.fleet)
    results = {"mode": "numba" if USE_NUMBA else "pure"}

    def timed(label, fn, repeat=1):
        fn()  # warm up (JIT compilation / cache load)
        t0 = time.perf_counter()
        for _ in range(repeat):
            out = fn()
        results[label] = (time.perf_counter() - t0) / repeat
        return out

    singles = init_singleton_routes(inst)
    routes = timed("savings_construction",
                   lambda: run_savings_construction(list(singles), inst, params))
    sol = assign_vehicles(routes, inst, params)
    sol = eliminate_routes(sol, inst, params, np.random.default_rng(0))
    timed("tabu_block",
          lambda: run_tabu(sol, inst, params, iterations=iterations,
                           chunk_size=iterations))
    best = run_tabu(sol, inst, params, iterations=iterations,
                    chunk_size=iterations).solution
    timed("intra_pass", lambda: improve_solution(best, inst, params))
    results["tabu_iterations"] = iterations
    return results


def compare(args):
    rows = {}
    for pure in ("0", "1"):
        env = dict(os.environ, FLEETROUTE_PURE=pure)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--customers",
             str(args.customers), "--iterations", str(args.iterations), "--json"],
            capture_output=True, text=True, env=env, check=True,
        )
        res = json.loads(out.stdout.strip().splitlines()[-1])
        rows[res["mode"]] = res
    print(f"{'kernel':<24} {'numba':>10} {'pure':>12} {'speedup':>9}")
    for label in ("savings_construction", "tabu_block", "intra_pass"):
        a = rows["numba"][label]
        b = rows["pure"][label]
        print(f"{label:<24} {a:>9.3f}s {b:>11.3f}s {b / a:>8.1f}x")
    print(f"(tabu block = {args.iterations} iterations, "
          f"{args.customers} customers, 8 vehicles)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--customers", type=int, default=100)
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--compare", action="store_true")
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args()
    if args.compare:
        compare(args)
        return
    results = run_benchmarks(args.customers, args.iterations)
    if args.json:
        print(json.dumps(results))
    else:
        for key, value in results.items():
            print(f"{key}: {value if isinstance(value, str) else round(value, 4)}"
                  if not isinstance(value, float) else f"{key}: {value:.4f}s")


if __name__ == "__main__":
    main()
