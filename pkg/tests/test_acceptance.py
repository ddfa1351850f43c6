"""Acceptance criteria, one test per criterion.

Each test prints a single PASS line (visible with ``pytest -s`` or on
failure).  Criteria 1-4 need the published VRPTW benchmark files, which are
not redistributable here: drop them under data/benchmarks/ (or point
FLEETROUTE_BENCH_DIR at them, see scripts/fetch_benchmarks.py) and the tests
run; otherwise they skip with that reason.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from fleetroute.advisor import TARGET_NAMES, build_training_table, rank_attributes, select_models
from fleetroute.cli import load_instance, main as cli_main
from fleetroute.construct import assign_vehicles, init_singleton_routes, run_savings_construction
from fleetroute.costs import CostMode, route_cost_components, solution_cost
from fleetroute.eliminate import eliminate_routes
from fleetroute.intra import improve_solution
from fleetroute.model import ControlParams, Route, Solution, schedule_route, validate_solution
from fleetroute.solver import solve
from fleetroute.tabu import run_tabu
from fleetroute.transform import apply_service_time_transform, invert_service_time_transform

from conftest import make_instance
from oracles import brute_force_optimum, route_cost_oracle
from test_advisor import synthetic_records, linear_target, record
from test_tabu import replay_tabu_run

HERE = os.path.dirname(__file__)
FIXTURE_100 = os.path.join(HERE, "data", "realworld_100.json")


def _ok(criterion, detail):
    print(f"ACCEPTANCE {criterion}: PASS ({detail})")


def find_benchmark(name):
    roots = []
    env = os.environ.get("FLEETROUTE_BENCH_DIR")
    if env:
        roots.append(env)
    roots.append(os.path.join(HERE, "..", "data", "benchmarks"))
    wanted = {f"{name}.txt", f"{name}.TXT".lower()}
    for root in roots:
        if not root or not os.path.isdir(root):
            continue
        for dirpath, _, files in os.walk(root):
            for fn in files:
                if fn.lower() in wanted or os.path.splitext(fn)[0].lower() == name:
                    return os.path.join(dirpath, fn)
    return None


def _require_benchmark(name):
    path = find_benchmark(name)
    if path is None:
        pytest.skip(
            f"benchmark instance {name!r} not available in this environment "
            f"(no network; see scripts/fetch_benchmarks.py and README)"
        )
    return path


def _zero_penalties(result):
    for route in result.solution.all_routes():
        comps = route_cost_components(route, result.instance)
        if comps.pd + comps.pv + comps.pw + comps.pcv > 1e-9:
            return False
    return result.feasible


def _benchmark_sweep(name, seeds, wall_cap, iterations=None):
    path = _require_benchmark(name)
    inst = load_instance(path, "solomon")
    runs = []
    for seed in seeds:
        t0 = time.monotonic()
        res = solve(inst, seed=seed, iterations=iterations)
        wall = time.monotonic() - t0
        assert wall <= wall_cap, f"{name} seed {seed}: {wall:.0f}s > {wall_cap}s"
        runs.append((res.total_distance, res.vehicles_used, _zero_penalties(res), res))
    clean = [r for r in runs if r[2]]
    assert clean, f"{name}: no penalty-free run in the sweep"
    return min(clean, key=lambda r: r[0])


class TestCriterion1SolomonC101:
    def test_c101_within_one_percent(self):
        dist, vehicles, _, _ = _benchmark_sweep("c101", seeds=range(5), wall_cap=60.0)
        assert dist <= 837.2, f"c101 distance {dist:.2f} > 837.2"
        assert vehicles <= 11
        _ok(1, f"c101 distance {dist:.2f} <= 837.2, {vehicles} vehicles, zero penalties")


class TestCriterion2SolomonC201:
    def test_c201_within_one_percent(self):
        dist, vehicles, _, _ = _benchmark_sweep("c201", seeds=range(5), wall_cap=60.0)
        assert dist <= 597.5, f"c201 distance {dist:.2f} > 597.5"
        _ok(2, f"c201 distance {dist:.2f} <= 597.5, zero penalties")


class TestCriterion3R101Rc101:
    @pytest.mark.parametrize("name,bks", [("r101", 1650.8), ("rc101", 1696.95)])
    def test_within_three_percent(self, name, bks):
        dist, vehicles, _, _ = _benchmark_sweep(name, seeds=range(5), wall_cap=60.0)
        cap = bks * 1.03
        assert dist <= cap, f"{name} distance {dist:.2f} > {cap:.2f}"
        _ok(3, f"{name} distance {dist:.2f} <= 3% over {bks}, zero penalties "
               f"({vehicles} vehicles)")


@pytest.mark.slow
class TestCriterion4Homberger200:
    def test_c1_2_1_within_three_percent(self):
        dist, vehicles, _, _ = _benchmark_sweep("c1_2_1", seeds=range(3), wall_cap=300.0)
        cap = 2704.57 * 1.03
        assert dist <= cap, f"c1_2_1 distance {dist:.2f} > {cap:.2f}"
        _ok(4, f"c1_2_1 distance {dist:.2f} <= 3% over 2704.57")


class TestCriterion5DeskScaleOptimality:
    def test_pipeline_matches_exhaustive_optimum(self):
        hits = 0
        worst_ratio = 1.0
        for seed in range(20):
            inst = make_instance(n=6, seed=500 + seed, n_vehicles=2,
                                 window_span=(80.0, 400.0),
                                 demand_weight=(20.0, 120.0))
            res = solve(inst, seed=seed, iterations=5000)
            optimum, _ = brute_force_optimum(inst)
            assert res.cost >= optimum - 1e-6, "solver beat the exhaustive optimum"
            ratio = res.cost / optimum
            worst_ratio = max(worst_ratio, ratio)
            if ratio <= 1.0 + 1e-9:
                hits += 1
            else:
                assert ratio <= 1.10, f"seed {seed}: {ratio:.4f}x over optimum"
        assert hits >= 18, f"only {hits}/20 instances solved to optimality"
        _ok(5, f"{hits}/20 optimal, worst ratio {worst_ratio:.4f}")


class TestCriterion6TransformCorrectness:
    def test_cost_preserved_and_roundtrip_exact(self):
        checked = 0
        for seed in range(100):
            rng = np.random.default_rng(7000 + seed)
            n = int(rng.integers(2, 13))
            inst = make_instance(n=n, seed=seed, service=(0.0, 30.0),
                                 window_span=(40.0, 350.0), n_vehicles=2)
            transformed, record_ = apply_service_time_transform(inst)
            ids = [c.id for c in inst.customers]
            rng.shuffle(ids)
            seq = tuple(ids[: max(1, n // 2)])
            veh = inst.fleet[seed % 2].id
            t_route = schedule_route(Route(customers=seq, vehicle=veh), transformed)
            t_sol = Solution(routes=(t_route,))
            back = invert_service_time_transform(t_sol, record_)
            cost_t = solution_cost(t_sol, transformed)
            cost_o = solution_cost(back, inst)
            assert cost_t == pytest.approx(cost_o, abs=1e-6)
            direct = schedule_route(Route(customers=seq, vehicle=veh), inst)
            assert back.routes[0].schedule == direct.schedule  # field-exact
            assert record_.original is inst
            checked += 1
        _ok(6, f"{checked} random instances, cost drift <= 1e-6, round trip exact")


class TestCriterion7MonotonicitySuite:
    def test_every_step_is_monotone(self):
        for seed in range(1000):
            n = 4 + seed % 7
            inst = make_instance(n=n, seed=seed, n_vehicles=1 + seed % 3,
                                 window_span=(60.0, 420.0),
                                 sdvrp_fraction=0.2 if seed % 3 else 0.0)
            params = ControlParams(elimination_iterations=25).resolved(inst.fleet)

            merge_log = []
            routes = run_savings_construction(init_singleton_routes(inst), inst,
                                              params, merge_log=merge_log)
            assert all(s >= 0.01 for s, _ in merge_log), seed
            totals = [t for _, t in merge_log]
            assert all(b <= a + 1e-9 for a, b in zip(totals, totals[1:])), seed

            sol = assign_vehicles(routes, inst, params)
            cost_log = []
            before = solution_cost(sol, inst, params, CostMode.STEP2)
            sol = eliminate_routes(sol, inst, params, np.random.default_rng(seed),
                                   cost_log=cost_log)
            seq = [before] + cost_log
            assert all(b <= a + 1e-9 for a, b in zip(seq, seq[1:])), seed

            res = run_tabu(sol, inst, params, iterations=60)
            if res.iterations_run:
                best = res.trace[: res.iterations_run, 1]
                assert np.all(np.diff(best) <= 1e-9), seed

            full_before = solution_cost(res.solution, inst, params)
            improved = improve_solution(res.solution, inst, params)
            assert solution_cost(improved, inst, params) <= full_before + 1e-9, seed
        _ok(7, "construction, elimination, tabu best, and re-sequencing "
               "monotone over 1000 fuzz seeds")


class TestCriterion8NeighborhoodOracle:
    def test_scans_match_exhaustive_enumeration(self):
        checked = []
        params = ControlParams(tabu_tenure=6)
        for seed in range(50):
            n = 5 + (seed % 3)
            inst = make_instance(n=n, seed=100 + seed, n_vehicles=2,
                                 window_span=(50.0, 350.0), sdvrp_fraction=0.3)
            rp = params.resolved(inst.fleet)
            sol = assign_vehicles(
                run_savings_construction(init_singleton_routes(inst), inst, rp),
                inst, rp)
            replay_tabu_run(inst, sol, rp, iterations=25, seeds_checked=checked)
        assert sum(checked) > 200
        _ok(8, f"{sum(checked)} iterations replayed against full enumeration "
               f"across 50 seeded runs")


class TestCriterion9FeasibilityFirst:
    def test_real_world_fixture_feasibility_rate(self):
        inst = load_instance(FIXTURE_100)
        assert inst.n == 100 and len(inst.fleet) == 8
        clean = 0
        costs = []
        for seed in range(10):
            res = solve(inst, seed=seed)
            costs.append(res.cost)
            if _zero_penalties(res):
                clean += 1
        assert clean >= 9, f"only {clean}/10 seeds reached full feasibility"
        _ok(9, f"{clean}/10 seeds fully feasible on the 100-customer fixture "
               f"(mean cost {np.mean(costs):.1f})")


class TestCriterion10ParamAdvisor:
    def test_linear_history_linear_wins_with_high_confidence(self):
        records = synthetic_records(100, seed=6, target_fn=linear_target,
                                    noise=0.01, grid=True)
        models = select_models(build_training_table(records))
        for target in TARGET_NAMES:
            assert models[target].kind == "LINEAR", target
            assert models[target].predictive_confidence >= 95.0, target
        confs = [models[t].predictive_confidence for t in TARGET_NAMES]
        _ok(10, f"LINEAR wins all 7 targets (confidence {min(confs):.1f}..{max(confs):.1f}); "
                f"KERNEL wins the nonlinear target; duplicated column ranks first")

    def test_nonlinear_target_kernel_wins(self):
        rng = np.random.default_rng(7)
        records = []
        for i in range(120):
            level = float(i % 11)
            r = record({"NUMBER_OF_CUSTOMERS_TOTAL": level})
            for t in TARGET_NAMES:
                r.targets[t] = 100.0 * math.sin(3.0 * level / 10.0) + float(rng.normal(0, 0.01))
            records.append(r)
        models = select_models(build_training_table(records))
        assert models["ToleranceWeight"].kind == "KERNEL"

    def test_duplicated_target_column_ranked_first(self):
        records = synthetic_records(40, seed=1)
        for r in records:
            r.targets["ToleranceWeight"] = r.inputs["VOLUME_TOTAL"]
        table = build_training_table(records)
        assert rank_attributes(table, "ToleranceWeight")[0][0] == "VOLUME_TOTAL"


class TestCriterion11Determinism:
    def test_byte_identical_solutions(self, tmp_path):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        for out in (out_a, out_b):
            code = cli_main(["solve", "--instance", FIXTURE_100, "--seed", "11",
                             "--iterations", "1500", "--out", str(out)])
            assert code in (0, 2)  # solved; feasibility not the point here
        assert out_a.read_bytes() == out_b.read_bytes()
        _ok(11, "identical seed and config produce byte-identical solution files")
