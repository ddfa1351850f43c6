import numpy as np
import pytest

from fleetroute.model import (
    Customer,
    Depot,
    ProblemInstance,
    Vehicle,
    build_time_matrix,
)


def make_instance(n=6, seed=0, n_vehicles=2, area=50.0, depot_close=10_000.0,
                  window_span=(100.0, 400.0), window_start_max=200.0,
                  demand_weight=(10.0, 100.0), demand_volume=(0.05, 0.5),
                  service=(5.0, 15.0), capacities=None, costs=None,
                  sdvrp_fraction=0.0, name="synthetic"):
    """Random but structurally sane instance for property tests."""
    rng = np.random.default_rng(seed)
    if capacities is None:
        capacities = [(400.0, 4.0), (600.0, 6.0), (250.0, 2.5), (800.0, 8.0)]
    if costs is None:
        costs = [1.0, 1.4, 0.8, 1.9]
    fleet = tuple(
        Vehicle(id=f"V{k + 1}", max_weight=capacities[k % len(capacities)][0],
                max_volume=capacities[k % len(capacities)][1],
                variable_cost=costs[k % len(costs)])
        for k in range(n_vehicles)
    )
    vehicle_ids = [v.id for v in fleet]
    customers = []
    for i in range(n):
        start = float(rng.uniform(0, window_start_max))
        admissible = None
        if sdvrp_fraction and rng.random() < sdvrp_fraction and n_vehicles > 1:
            k = int(rng.integers(1, n_vehicles))
            admissible = frozenset(rng.choice(vehicle_ids, size=k, replace=False).tolist())
        customers.append(Customer(
            id=i + 1,
            x=float(rng.uniform(0, area)), y=float(rng.uniform(0, area)),
            demand_weight=float(rng.uniform(*demand_weight)),
            demand_volume=float(rng.uniform(*demand_volume)),
            window_start=start,
            window_end=start + float(rng.uniform(*window_span)),
            service_time=float(rng.uniform(*service)),
            admissible_vehicles=admissible,
        ))
    depot = Depot(x=area / 2, y=area / 2, open=0.0, close=depot_close)
    matrix = build_time_matrix(customers, depot)
    return ProblemInstance(depot=depot, customers=tuple(customers), fleet=fleet,
                           matrix=matrix, name=name)


@pytest.fixture
def small_instance():
    return make_instance(n=6, seed=7)
