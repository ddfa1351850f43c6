#!/usr/bin/env python3
"""Generate the distribution-company style test fixture.

About 100 customers in a handful of city clusters around one depot, eight
vehicles of widely different sizes and per-km costs, site-dependency rules
keeping big trucks out of some locations, measured (non-Euclidean) travel
times, and a 16-hour depot day.  Deterministic; writes
tests/data/realworld_100.json.
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fleetroute.io import write_extended, parse_extended  # noqa: E402
from fleetroute.model import (  # noqa: E402
    Customer, Depot, MatrixBlock, ProblemInstance, TimeMatrix, Vehicle,
    build_time_matrix,
)

SEED = 20180614
N_CUSTOMERS = 100


def generate() -> ProblemInstance:
    rng = np.random.default_rng(SEED)
    depot = Depot(x=0.0, y=0.0, open=0.0, close=960.0)  # 06:00 .. 22:00

    cities = [
        ("center", 0.0, 0.0, 3.0, 30),
        ("north", 4.0, 18.0, 2.5, 18),
        ("east", 21.0, 3.0, 3.0, 16),
        ("southwest", -14.0, -11.0, 2.5, 14),
        ("west", -23.0, 5.0, 2.0, 12),
        ("ne-village", 13.0, 12.0, 1.5, 10),
    ]

    fleet = (
        Vehicle(id="T-600", max_weight=6000, max_volume=30.0, variable_cost=1.00,
                fixed_cost=120.0, shift_start=0.0, shift_end=960.0),
        Vehicle(id="T-400", max_weight=4000, max_volume=20.0, variable_cost=0.85,
                fixed_cost=95.0, shift_start=0.0, shift_end=960.0),
        Vehicle(id="T-300", max_weight=3000, max_volume=15.0, variable_cost=0.75,
                fixed_cost=80.0, shift_start=0.0, shift_end=960.0),
        Vehicle(id="T-250", max_weight=2500, max_volume=12.0, variable_cost=0.68,
                fixed_cost=70.0, shift_start=0.0, shift_end=960.0),
        Vehicle(id="V-200", max_weight=2000, max_volume=10.0, variable_cost=0.60,
                fixed_cost=60.0, shift_start=0.0, shift_end=960.0),
        Vehicle(id="V-150", max_weight=1500, max_volume=8.0, variable_cost=0.55,
                fixed_cost=50.0, shift_start=0.0, shift_end=960.0),
        Vehicle(id="V-100", max_weight=1000, max_volume=5.0, variable_cost=0.50,
                fixed_cost=40.0, shift_start=60.0, shift_end=960.0),
        Vehicle(id="V-080", max_weight=800, max_volume=4.0, variable_cost=0.45,
                fixed_cost=40.0, shift_start=60.0, shift_end=900.0),
    )
    small_ids = frozenset(v.id for v in fleet[3:])   # no big trucks downtown
    mid_ids = frozenset(v.id for v in fleet[:6])     # cold chain on larger vans

    customers = []
    cid = 0
    for name, cx, cy, spread, count in cities:
        for _ in range(count):
            cid += 1
            x = float(rng.normal(cx, spread))
            y = float(rng.normal(cy, spread))
            weight = float(rng.gamma(2.2, 55.0) + 8.0)
            volume = float(weight / rng.uniform(550.0, 900.0))
            service = float(rng.uniform(6.0, 18.0))
            if rng.random() < 0.55:
                a, b = 0.0, 960.0
            else:
                a = float(rng.uniform(0.0, 420.0))
                b = a + float(rng.uniform(300.0, 480.0))
            admissible = None
            if name == "center" and rng.random() < 0.5:
                admissible = small_ids
            elif rng.random() < 0.08:
                admissible = mid_ids
            customers.append(Customer(
                id=f"K{cid:03d}", x=round(x, 3), y=round(y, 3),
                demand_weight=round(weight, 1), demand_volume=round(volume, 4),
                window_start=round(a, 1), window_end=round(b, 1),
                service_time=round(service, 1),
                admissible_vehicles=admissible,
                city=name,
                articles=int(rng.integers(1, 40)),
            ))

    base = build_time_matrix(customers, depot)
    # measured road network: 20% longer than the crow flies, 28 km/h average
    factor_d = 1.2
    factor_t = 1.2 * (60.0 / 28.0)
    matrix = TimeMatrix(
        depot_to=np.round(base.depot_to * factor_t, 2),
        to_depot=np.round(base.to_depot * factor_t, 2),
        between=np.round(base.between * factor_t, 2),
        distances=MatrixBlock(
            depot_to=np.round(base.distances.depot_to * factor_d, 3),
            to_depot=np.round(base.distances.to_depot * factor_d, 3),
            between=np.round(base.distances.between * factor_d, 3),
        ),
    )
    return ProblemInstance(depot=depot, customers=tuple(customers), fleet=fleet,
                           matrix=matrix, name="realworld_100")


def main():
    inst = generate()
    total_w = sum(c.demand_weight for c in inst.customers)
    total_v = sum(c.demand_volume for c in inst.customers)
    cap_w = sum(v.max_weight for v in inst.fleet)
    cap_v = sum(v.max_volume for v in inst.fleet)
    print(f"{inst.n} customers, {len(inst.fleet)} vehicles")
    print(f"weight {total_w:.0f}/{cap_w:.0f} kg ({100 * total_w / cap_w:.0f}%), "
          f"volume {total_v:.1f}/{cap_v:.1f} m3 ({100 * total_v / cap_v:.0f}%)")
    restricted = sum(1 for c in inst.customers if c.admissible_vehicles is not None)
    print(f"{restricted} customers with vehicle restrictions")

    out = os.path.join(os.path.dirname(__file__), "..", "tests", "data",
                       "realworld_100.json")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    text = write_extended(inst, explicit_matrices=True)
    parse_extended(text)  # self check
    with open(out, "w") as fh:
        fh.write(text)
    print(f"wrote {os.path.normpath(out)} ({len(text) // 1024} KiB)")


if __name__ == "__main__":
    main()
