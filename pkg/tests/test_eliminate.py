import numpy as np
import pytest

from fleetroute.costs import CostMode, solution_cost
from fleetroute.eliminate import eliminate_routes, uniform_random_permutation
from fleetroute.model import (
    FICTITIOUS,
    ControlParams,
    Customer,
    Depot,
    ProblemInstance,
    Route,
    Solution,
    Vehicle,
    build_time_matrix,
    schedule_route,
)
from conftest import make_instance
from fleetroute.construct import assign_vehicles, init_singleton_routes, run_savings_construction


def cust(cid, x, y, w=10.0, v=0.1, a=0.0, b=1e6, s=0.0):
    return Customer(id=cid, x=x, y=y, demand_weight=w, demand_volume=v,
                    window_start=a, window_end=b, service_time=s)


def build(customers, fleet, depot=None):
    depot = depot or Depot(x=0.0, y=0.0, open=0.0, close=1e6)
    return ProblemInstance(depot=depot, customers=tuple(customers), fleet=tuple(fleet),
                           matrix=build_time_matrix(customers, depot))


class TestUniformPermutation:
    def test_empty(self):
        assert uniform_random_permutation(0, np.random.default_rng(0)).tolist() == []

    def test_single(self):
        assert uniform_random_permutation(1, np.random.default_rng(0)).tolist() == [0]

    def test_permutation_property(self):
        rng = np.random.default_rng(3)
        for n in (2, 5, 9):
            assert sorted(uniform_random_permutation(n, rng).tolist()) == list(range(n))

    def test_uniform_over_all_orderings(self):
        # 60000 draws of S_3; each of the 6 orderings within 6 sigma of 10000
        rng = np.random.default_rng(12345)
        counts = {}
        draws = 60000
        for _ in range(draws):
            key = tuple(uniform_random_permutation(3, rng).tolist())
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 6
        expected = draws / 6
        sigma = (draws * (1 / 6) * (5 / 6)) ** 0.5
        for key, got in counts.items():
            assert abs(got - expected) <= 6 * sigma, (key, got)


class TestEliminateRoutes:
    def fixture_absorbable(self):
        # route (C) alone is pure overhead; (A, B) has spare capacity for C
        inst = build(
            [cust("A", 10.0, 0.0), cust("B", 12.0, 0.0), cust("C", 11.0, 1.0)],
            fleet=(Vehicle(id="V1", max_weight=100, max_volume=10, variable_cost=1.0),
                   Vehicle(id="V2", max_weight=100, max_volume=10, variable_cost=1.0)),
        )
        r1 = schedule_route(Route(customers=("A", "B"), vehicle="V1"), inst)
        r2 = schedule_route(Route(customers=("C",), vehicle="V2"), inst)
        return inst, Solution(routes=(r1, r2))

    def test_absorbs_singleton(self):
        inst, sol = self.fixture_absorbable()
        before = solution_cost(sol, inst, mode=CostMode.STEP2)
        out = eliminate_routes(sol, inst, rng=np.random.default_rng(0))
        assert len(out.routes) == 1
        assert solution_cost(out, inst, mode=CostMode.STEP2) < before
        assert sorted(out.routes[0].customers) == ["A", "B", "C"]

    def test_at_capacity_unchanged(self):
        inst = build(
            [cust("A", 10.0, 0.0, w=90.0), cust("B", 11.0, 0.0, w=95.0)],
            fleet=(Vehicle(id="V1", max_weight=100, max_volume=10, variable_cost=1.0),
                   Vehicle(id="V2", max_weight=100, max_volume=10, variable_cost=1.0)),
        )
        r1 = schedule_route(Route(customers=("A",), vehicle="V1"), inst)
        r2 = schedule_route(Route(customers=("B",), vehicle="V2"), inst)
        sol = Solution(routes=(r1, r2))
        out = eliminate_routes(sol, inst, rng=np.random.default_rng(0))
        assert len(out.routes) == 2
        assert {r.customers for r in out.routes} == {("A",), ("B",)}

    def test_fictitious_route_removed_first(self):
        inst = build(
            [cust("A", 10.0, 0.0), cust("B", 12.0, 0.0), cust("C", 11.0, 1.0)],
            fleet=(Vehicle(id="V1", max_weight=100, max_volume=10, variable_cost=1.0),),
        )
        r1 = schedule_route(Route(customers=("A", "B"), vehicle="V1"), inst)
        r2 = schedule_route(Route(customers=("C",), vehicle=FICTITIOUS), inst,
                            ControlParams(additional_vehicle_cost=50.0))
        params = ControlParams(additional_vehicle_cost=50.0)
        out = eliminate_routes(Solution(routes=(r1, r2)), inst, params,
                               rng=np.random.default_rng(1))
        assert len(out.routes) == 1
        assert out.routes[0].vehicle == "V1"

    def test_cost_and_route_count_monotone(self):
        for seed in range(25):
            inst = make_instance(n=8, seed=seed, n_vehicles=3,
                                 window_span=(150.0, 600.0))
            merged = run_savings_construction(init_singleton_routes(inst), inst)
            sol = assign_vehicles(merged, inst)
            before_cost = solution_cost(sol, inst, mode=CostMode.STEP2)
            out = eliminate_routes(sol, inst, rng=np.random.default_rng(seed))
            after_cost = solution_cost(out, inst, mode=CostMode.STEP2)
            assert len(out.routes) <= len(sol.routes)
            assert after_cost <= before_cost + 1e-9
            got = sorted(c for r in out.routes for c in r.customers)
            assert got == [c.id for c in inst.customers]

    def test_deterministic_under_seed(self):
        inst = make_instance(n=8, seed=5, n_vehicles=3)
        merged = run_savings_construction(init_singleton_routes(inst), inst)
        sol = assign_vehicles(merged, inst)
        a = eliminate_routes(sol, inst, rng=np.random.default_rng(7))
        b = eliminate_routes(sol, inst, rng=np.random.default_rng(7))
        assert [r.customers for r in a.routes] == [r.customers for r in b.routes]
        assert [r.vehicle for r in a.routes] == [r.vehicle for r in b.routes]
