"""Penalty cost model.

The total cost of a route is its travelled distance priced at the vehicle's
per-km rate plus penalty terms for late service, capacity overruns, customers
on inadmissible vehicles, and load carried far from the depot.  The first two
solve steps run restricted modes that ignore the penalties their invariants
already rule out.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from .errors import ContractError
from .model import ControlParams, ProblemInstance, Route, Solution


class CostMode(IntEnum):
    FULL = 0   # rrc + pd + pv + pw + pcv + ppw
    STEP1 = 1  # rrc + ppw
    STEP2 = 2  # rrc + pcv + ppw


@dataclass(frozen=True)
class CostComponents:
    rrc: float   # distance * variable cost (+ fixed cost when enabled)
    pd: float    # minutes late * PenaltyDelay
    pv: float    # relative volume excess * PenaltyPercentageVolume
    pw: float    # relative weight excess * PenaltyPercentageWeight
    pcv: float   # inadmissible stops * PenaltyCustomersVehicles
    ppw: float   # load-weighted cumulative distance * CostIncreasing * c_v / mW

    @property
    def total(self) -> float:
        return self.rrc + self.pd + self.pv + self.pw + self.pcv + self.ppw


def route_cost_components(route: Route, instance: ProblemInstance,
                          params: Optional[ControlParams] = None,
                          mode: CostMode = CostMode.FULL,
                          include_fixed: bool = False) -> CostComponents:
    if route.schedule is None:
        raise ContractError("route_cost_components: route must be scheduled first")
    params = (params or ControlParams()).resolved(instance.fleet)
    vehicle = instance.vehicle(route.vehicle, params)

    delay = 0.0
    load_w = 0.0
    load_v = 0.0
    wrong = 0
    cum = 0.0
    load_dist = 0.0  # sum over stops of (distance from depot to stop) * stop weight
    prev = None
    for cid, (_, _, end) in zip(route.customers, route.schedule):
        c = instance.customer(cid)
        delay += max(0.0, end - c.window_end)
        load_w += c.demand_weight
        load_v += c.demand_volume
        if not c.admits(route.vehicle):
            wrong += 1
        cum += instance.distance(prev, cid)
        load_dist += cum * c.demand_weight
        prev = cid
    total_distance = cum + instance.distance(prev, None)

    rrc = total_distance * vehicle.variable_cost
    if include_fixed:
        rrc += vehicle.fixed_cost
    pd = params.penalty_delay * delay
    pv = params.penalty_percentage_volume * max(0.0, load_v - vehicle.max_volume) / vehicle.max_volume
    pw = params.penalty_percentage_weight * max(0.0, load_w - vehicle.max_weight) / vehicle.max_weight
    pcv = wrong * params.penalty_customers_vehicles
    ppw = params.cost_increasing * vehicle.variable_cost * load_dist / vehicle.max_weight

    if mode == CostMode.STEP1:
        pd = pv = pw = pcv = 0.0
    elif mode == CostMode.STEP2:
        pd = pv = pw = 0.0
    return CostComponents(rrc=rrc, pd=pd, pv=pv, pw=pw, pcv=pcv, ppw=ppw)


def solution_cost(solution: Solution, instance: ProblemInstance,
                  params: Optional[ControlParams] = None,
                  mode: CostMode = CostMode.FULL,
                  include_fixed: bool = False) -> float:
    return sum(
        route_cost_components(r, instance, params, mode, include_fixed).total
        for r in solution.all_routes()
    )
