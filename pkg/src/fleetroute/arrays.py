"""Flat array packing of an instance for the numeric kernels.

Internal node indexing: 0 is the depot, 1..n are customers in instance
order.  Vehicles are indexed 0..nveh-1 in fleet order; index nveh is the
fictitious vehicle (biggest allowed capacities, unbounded shift, the
additional per-km cost).  Node attributes live in the rows of ``node`` and
vehicle attributes in the rows of ``veh`` (row indices in
:mod:`fleetroute.kernels`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ControlParams, ProblemInstance, Route, FICTITIOUS, schedule_route
from .kernels import (
    ND_A, ND_B, ND_S, ND_W, ND_V,
    VH_MW, VH_MV, VH_COST, VH_FIXED, VH_SS, VH_SE,
    CP_PEN_DELAY, CP_PPV, CP_PPW, CP_PCV, CP_COST_INC, CP_LAMBDA,
    CP_TOL_W, CP_TOL_V, CP_BIG_W, CP_BIG_V, CP_SIM, CP_INCLUDE_FIXED,
)

CP_SIZE = 12
BIG_TIME = 1e17


@dataclass
class PackedInstance:
    n: int
    nveh: int
    dist: np.ndarray    # (n+1, n+1)
    time: np.ndarray    # (n+1, n+1)
    node: np.ndarray    # (5, n+1): window start/end, service, weight, volume
    adm: np.ndarray     # (n+1, nveh+1) uint8
    cdiff: np.ndarray   # (n+1, n+1) int64 admissibility differences
    veh: np.ndarray     # (6, nveh+1)
    depot_open: float
    depot_close: float
    cp: np.ndarray      # (CP_SIZE,)
    ids: list           # customer id by index-1
    vids: list          # vehicle id by index
    _cindex: dict = field(default_factory=dict, repr=False)
    _vindex: dict = field(default_factory=dict, repr=False)

    def customer_index(self, cid) -> int:
        return self._cindex[cid]

    def vehicle_index(self, vid) -> int:
        if vid == FICTITIOUS:
            return self.nveh
        return self._vindex[vid]

    def vehicle_id(self, v: int):
        return FICTITIOUS if v == self.nveh else self.vids[v]


def pack_params(params: ControlParams, fleet, include_fixed: bool = False) -> np.ndarray:
    p = params.resolved(fleet)
    cp = np.zeros(CP_SIZE)
    cp[CP_PEN_DELAY] = p.penalty_delay
    cp[CP_PPV] = p.penalty_percentage_volume
    cp[CP_PPW] = p.penalty_percentage_weight
    cp[CP_PCV] = p.penalty_customers_vehicles
    cp[CP_COST_INC] = p.cost_increasing
    cp[CP_LAMBDA] = p.lambda_
    cp[CP_TOL_W] = p.tolerance_weight
    cp[CP_TOL_V] = p.tolerance_volume
    cp[CP_BIG_W] = p.biggest_capacity_weight
    cp[CP_BIG_V] = p.biggest_capacity_volume
    cp[CP_SIM] = p.savings_similarity_factor
    cp[CP_INCLUDE_FIXED] = 1.0 if include_fixed else 0.0
    return cp


def pack_instance(instance: ProblemInstance, params: ControlParams,
                  include_fixed: bool = False) -> PackedInstance:
    params = params.resolved(instance.fleet)
    n = instance.n
    nveh = len(instance.fleet)

    dist = instance.matrix.distances.full()
    time = instance.matrix.time_block().full()

    node = np.zeros((5, n + 1))
    node[ND_A, 0] = instance.depot.open
    node[ND_B, 0] = min(instance.depot.close, BIG_TIME)
    adm = np.ones((n + 1, nveh + 1), dtype=np.uint8)
    for i, c in enumerate(instance.customers, start=1):
        node[ND_A, i] = c.window_start
        node[ND_B, i] = min(c.window_end, BIG_TIME)
        node[ND_S, i] = c.service_time
        node[ND_W, i] = c.demand_weight
        node[ND_V, i] = c.demand_volume
        if c.admissible_vehicles is not None:
            for v, veh in enumerate(instance.fleet):
                if veh.id not in c.admissible_vehicles:
                    adm[i, v] = 0

    real = adm[:, :nveh].astype(np.int64)
    cdiff = (real[:, None, :] != real[None, :, :]).sum(axis=2).astype(np.int64)

    veh = np.zeros((6, nveh + 1))
    for v, vv in enumerate(instance.fleet):
        veh[VH_MW, v] = vv.max_weight
        veh[VH_MV, v] = vv.max_volume
        veh[VH_COST, v] = vv.variable_cost
        veh[VH_FIXED, v] = vv.fixed_cost
        veh[VH_SS, v] = max(vv.shift_start, -BIG_TIME)
        veh[VH_SE, v] = min(vv.shift_end, BIG_TIME)
    veh[VH_MW, nveh] = params.biggest_capacity_weight
    veh[VH_MV, nveh] = params.biggest_capacity_volume
    veh[VH_COST, nveh] = params.additional_vehicle_cost
    veh[VH_SS, nveh] = -BIG_TIME
    veh[VH_SE, nveh] = BIG_TIME

    packed = PackedInstance(
        n=n, nveh=nveh, dist=dist, time=time, node=node, adm=adm, cdiff=cdiff,
        veh=veh,
        depot_open=instance.depot.open,
        depot_close=min(instance.depot.close, BIG_TIME),
        cp=pack_params(params, instance.fleet, include_fixed),
        ids=[c.id for c in instance.customers],
        vids=[v.id for v in instance.fleet],
    )
    packed._cindex = {cid: i + 1 for i, cid in enumerate(packed.ids)}
    packed._vindex = {vid: i for i, vid in enumerate(packed.vids)}
    return packed


def routes_to_arrays(routes, packed: PackedInstance, max_r=None, width=None):
    """Route objects -> (routes, rlen, rveh) slot arrays."""
    max_r = max_r or max(len(routes), 1)
    width = width or packed.n + 2
    arr = np.zeros((max_r, width), dtype=np.int64)
    rlen = np.zeros(max_r, dtype=np.int64)
    rveh = np.full(max_r, -1, dtype=np.int64)
    for s, route in enumerate(routes):
        rlen[s] = len(route.customers)
        for k, cid in enumerate(route.customers):
            arr[s, k] = packed.customer_index(cid)
        if route.vehicle is not None:
            rveh[s] = packed.vehicle_index(route.vehicle)
    return arr, rlen, rveh


def arrays_to_routes(arr, rlen, rveh, packed: PackedInstance,
                     instance: ProblemInstance, params: ControlParams,
                     drop_empty: bool = True):
    """Slot arrays -> scheduled Route objects (against the given instance)."""
    out = []
    for s in range(len(rlen)):
        m = int(rlen[s])
        if m == 0 and drop_empty:
            continue
        cids = tuple(packed.ids[int(arr[s, k]) - 1] for k in range(m))
        veh = packed.vehicle_id(int(rveh[s])) if rveh[s] >= 0 else None
        route = Route(customers=cids, vehicle=veh)
        if veh is not None:
            route = schedule_route(route, instance, params)
        out.append(route)
    return out
