"""Step 1: savings-based route construction and vehicle assignment.

Starts from one route per customer and repeatedly commits the merge with the
highest penalized savings.  A merge inserts one whole route (forward or
reversed) anywhere into another, so savings depend on the insertion point and
cannot be precomputed.  Construction rules: no delays, loads within the
biggest allowed capacities, costs priced with the cheapest capacity-feasible
vehicle.  A similarity penalty steers customers with matching vehicle
restrictions into the same routes.

Merging stops when the best penalized savings drops below 0.01.  Ties are
broken by scan order: route pair ascending, host block (lower slot first),
insert position ascending, forward before inverted.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import kernels as K
from .arrays import pack_instance, routes_to_arrays
from .model import ControlParams, ProblemInstance, Route, Solution, schedule_route


def init_singleton_routes(instance: ProblemInstance, exclude_ids=()) -> list:
    """One depot-customer-depot route per customer not already pre-routed."""
    skip = set(exclude_ids)
    return [Route(customers=(c.id,)) for c in instance.customers if c.id not in skip]


def merge_savings(host: Route, guest: Route, position: int, inverted: bool,
                  instance: ProblemInstance,
                  params: Optional[ControlParams] = None) -> Optional[float]:
    """Penalized savings of inserting ``guest`` into ``host`` after ``position``.

    Position -1 prepends.  Returns None when the merge is rejected: identical
    routes, or the merged route overloads the biggest capacities or incurs a
    delay.
    """
    if host.customers == guest.customers:
        return None
    params = (params or ControlParams()).resolved(instance.fleet)
    packed = pack_instance(instance, params)

    h = np.array([packed.customer_index(c) for c in host.customers], dtype=np.int64)
    g = np.array([packed.customer_index(c) for c in guest.customers], dtype=np.int64)
    scratch = np.zeros(len(h) + len(g), dtype=np.int64)
    m = K._build_merged(h, len(h), g, len(g), position, 1 if inverted else 0, scratch)

    def loads(seq):
        lw = float(sum(packed.node[K.ND_W, i] for i in seq))
        lv = float(sum(packed.node[K.ND_V, i] for i in seq))
        return lw, lv

    lw_h, lv_h = loads(h)
    lw_g, lv_g = loads(g)
    c_h, ok_h = K.step1_eval(h, len(h), lw_h, lv_h, packed.dist, packed.time,
                             packed.node, packed.veh, packed.depot_open,
                             packed.cp, packed.nveh)
    c_g, ok_g = K.step1_eval(g, len(g), lw_g, lv_g, packed.dist, packed.time,
                             packed.node, packed.veh, packed.depot_open,
                             packed.cp, packed.nveh)
    c_m, ok_m = K.step1_eval(scratch, m, lw_h + lw_g, lv_h + lv_g, packed.dist,
                             packed.time, packed.node, packed.veh,
                             packed.depot_open, packed.cp, packed.nveh)
    if not (ok_h and ok_g and ok_m):
        return None
    diff = sum(int(packed.cdiff[i, j]) for i in h for j in g)
    similarity = params.savings_similarity_factor * diff / (len(h) + len(g))
    return c_h + c_g - c_m - similarity


def run_savings_construction(routes: list, instance: ProblemInstance,
                             params: Optional[ControlParams] = None,
                             merge_log: Optional[list] = None) -> list:
    """Merge the given routes until no candidate reaches the 0.01 threshold.

    When ``merge_log`` is given, one (penalized savings, step-1 total after
    the merge) pair per committed merge is appended to it.
    """
    if len(routes) <= 1:
        return list(routes)
    params = (params or ControlParams()).resolved(instance.fleet)
    packed = pack_instance(instance, params)
    arr, rlen, _ = routes_to_arrays(routes, packed)
    rdiff = _route_diff_matrix(arr, rlen, len(routes), packed.cdiff)
    mlog = np.full((len(routes), 2), -1.0)
    n = K.savings_construct(arr, rlen, len(routes), rdiff,
                            packed.dist, packed.time, packed.node, packed.veh,
                            packed.depot_open, packed.cp, packed.nveh, mlog)
    if merge_log is not None:
        merge_log.extend((float(s), float(t)) for s, t in mlog if s > -0.5)
    return [
        Route(customers=tuple(packed.ids[int(arr[r, k]) - 1] for k in range(int(rlen[r]))))
        for r in range(n)
    ]


def _route_diff_matrix(arr, rlen, n_routes, cdiff) -> np.ndarray:
    """Total admissibility differences between customer sets of route pairs."""
    max_r = arr.shape[0]
    rdiff = np.zeros((max_r, max_r))
    for i in range(n_routes - 1):
        seq_i = arr[i, : rlen[i]]
        for j in range(i + 1, n_routes):
            seq_j = arr[j, : rlen[j]]
            d = float(cdiff[np.ix_(seq_i, seq_j)].sum())
            rdiff[i, j] = d
            rdiff[j, i] = d
    return rdiff


def assign_vehicles(routes: list, instance: ProblemInstance,
                    params: Optional[ControlParams] = None) -> Solution:
    """Give every constructed route a vehicle.

    Small fleets (below the brute-force limit) get the exact minimum-cost
    injective assignment over all vehicle choices, with capacity- or
    delay-violating pairings screened out; larger fleets fall back to the
    greedy longest-route/cheapest-vehicle rule.  Routes beyond the fleet ride
    the fictitious vehicle.
    """
    params = (params or ControlParams()).resolved(instance.fleet)
    if not routes:
        return Solution(routes=())
    packed = pack_instance(instance, params)
    arr, rlen, _ = routes_to_arrays(routes, packed)
    nr = len(routes)
    slots = np.arange(nr, dtype=np.int64)

    if packed.nveh < params.brute_force_fleet_limit:
        cm = K.build_cost_matrix(arr, rlen, slots, nr, packed.dist, packed.time,
                                 packed.node, packed.adm, packed.veh,
                                 packed.depot_open, packed.cp, packed.nveh,
                                 K.MODE_STEP2, 1)
        _, assign = K.assign_min_cost(cm, nr, packed.nveh)
    else:
        out = np.zeros(K.RE_SIZE)
        rdist = np.zeros(nr)
        rlw = np.zeros(nr)
        rlv = np.zeros(nr)
        for r in range(nr):
            K.route_eval(arr[r], rlen[r], packed.nveh, packed.dist, packed.time,
                         packed.node, packed.adm, packed.veh, packed.depot_open,
                         packed.cp, K.MODE_STEP1, out)
            rdist[r] = out[K.RE_DIST]
            rlw[r] = out[K.RE_LW]
            rlv[r] = out[K.RE_LV]
        assign = np.full(nr, -1, dtype=np.int64)
        K.greedy_assign(slots, nr, rdist, rlw, rlv, packed.veh, packed.nveh,
                        0.0, 0.0, assign)

    assigned = []
    for r, route in enumerate(routes):
        vid = packed.vehicle_id(int(assign[r]))
        assigned.append(schedule_route(Route(customers=route.customers, vehicle=vid),
                                       instance, params))
    return Solution(routes=tuple(assigned))
