"""Pre-step data transformations and their exact inverses.

Three transformations run before route construction, in this order:

1. Customer windows are clipped so any window-respecting schedule also
   respects the depot's working hours.
2. Customers too large for every admissible vehicle get a split-delivery
   plan: a chosen vehicle shuttles full loads on fixed pre-routes, its shift
   start advances accordingly, and a residual customer with the leftover
   demand stays in play for the main solve.
3. Service times are folded into the travel-time matrix (half before, half
   after each stop) and into the windows, leaving zero unloading time.  The
   schedule in the folded frame maps back exactly: a stop's folded service
   point is the midpoint of the original service interval, so delays are
   unchanged.  Originals are retained for the inverse mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ContractError, InfeasibleCustomerError
from .model import (
    Customer,
    MatrixBlock,
    ProblemInstance,
    Route,
    Solution,
    TimeMatrix,
    schedule_route,
)


@dataclass(frozen=True)
class TransformRecord:
    """Holds the untouched instance so the inverse mapping is bit-exact."""

    original: ProblemInstance
    transformed: ProblemInstance


@dataclass(frozen=True)
class SplitPlan:
    customer_id: object
    vehicle_id: object
    full_trip_count: int
    pre_routes: tuple           # scheduled single-customer routes, fixed
    residual_customer: Customer
    adjusted_shift_start: float
    departure_base: float = 0.0
    trip_duration: float = 0.0
    trip_ids: tuple = ()


def clip_windows_to_depot(instance: ProblemInstance) -> ProblemInstance:
    """Tighten customer windows so depot open/close hours cannot be violated.

    A window start earlier than open + travel is unreachable; a window end
    later than close - return travel would strand the vehicle.
    """
    depot = instance.depot
    new_customers = []
    for i, c in enumerate(instance.customers):
        t_out = float(instance.matrix.depot_to[i])
        t_back = float(instance.matrix.to_depot[i])
        a = c.window_start
        b = c.window_end
        if a - t_out < depot.open:
            a = depot.open + t_out
        if t_back + b > depot.close:
            b = depot.close - t_back
        if a > b:
            raise InfeasibleCustomerError(
                c.id,
                f"customer {c.id}: window [{c.window_start}, {c.window_end}] collapses to "
                f"[{a}, {b}] under depot hours [{depot.open}, {depot.close}]",
            )
        if a != c.window_start or b != c.window_end:
            c = replace(c, window_start=a, window_end=b)
        new_customers.append(c)
    return replace(instance, customers=tuple(new_customers))


def _append_clone_rows(matrix: TimeMatrix, src_indices) -> TimeMatrix:
    """Extend both matrices with duplicate rows/columns for cloned customers."""

    def extend(block: MatrixBlock) -> MatrixBlock:
        depot_to = np.concatenate([block.depot_to, block.depot_to[src_indices]])
        to_depot = np.concatenate([block.to_depot, block.to_depot[src_indices]])
        between = block.between
        between = np.vstack([between, between[src_indices, :]])
        between = np.hstack([between, between[:, src_indices]])
        return MatrixBlock(depot_to=depot_to, to_depot=to_depot, between=between)

    time = extend(matrix.time_block())
    dist = extend(matrix.distances)
    return TimeMatrix(depot_to=time.depot_to, to_depot=time.to_depot,
                      between=time.between, distances=dist)


def plan_split_deliveries(instance: ProblemInstance,
                          literal_fraction: bool = False):
    """Split customers no admissible vehicle can serve in one trip.

    Returns ``(plans, residual_instance)``.  The residual instance carries the
    adjusted vehicle shifts, the shrunken residual customers, and one cloned
    customer record per fixed trip (appended, so the partition invariant over
    routes + pre-routes keeps holding).  ``literal_fraction`` switches the
    residual service time from the proportional share ``s * frac(r) / r`` to
    the literal fractional part of ``s / r``.
    """
    fleet = {v.id: v for v in instance.fleet}
    fleet_order = [v.id for v in instance.fleet]
    plans = []
    residual_customers = list(instance.customers)
    clones = []
    clone_sources = []

    for i, c in enumerate(instance.customers):
        admissible = [fleet[vid] for vid in fleet_order if c.admits(vid)]
        if not admissible:
            raise InfeasibleCustomerError(c.id, f"customer {c.id}: no admissible vehicle")
        if any(v.max_weight >= c.demand_weight and v.max_volume >= c.demand_volume
               for v in admissible):
            continue

        d_round = float(instance.matrix.distances.depot_to[i] + instance.matrix.distances.to_depot[i])
        best = None
        for v in admissible:
            r_v = max(c.demand_volume / v.max_volume, c.demand_weight / v.max_weight)
            trip_cost = math.ceil(r_v) * d_round * v.variable_cost
            if best is None or trip_cost < best[0]:
                best = (trip_cost, v, r_v)
        _, vehicle, r = best
        full = int(math.floor(r))
        frac = r - full

        t_out = float(instance.matrix.depot_to[i])
        t_back = float(instance.matrix.to_depot[i])
        trip_duration = t_out + c.service_time / r + t_back
        new_shift_start = vehicle.shift_start + full * trip_duration
        if new_shift_start > vehicle.shift_end:
            raise InfeasibleCustomerError(
                c.id,
                f"customer {c.id}: {full} split trips exceed the shift of vehicle {vehicle.id}",
            )

        share_w = c.demand_weight / r
        share_v = c.demand_volume / r
        share_s = c.service_time / r
        exact = frac <= 1e-12
        trip_ids = []
        for j in range(1, full + 1):
            if exact and j == full:
                trip_ids.append(c.id)
            else:
                trip_ids.append(f"{c.id}~trip{j}")
        trip_customers = [
            replace(c, id=tid, demand_weight=share_w, demand_volume=share_v,
                    service_time=share_s, articles=0)
            for tid in trip_ids
        ]

        if exact:
            residual = None
            residual_customers[i] = trip_customers[-1]
            new_clones = trip_customers[:-1]
            new_sources = [i] * (full - 1)
        else:
            if literal_fraction:
                res_service = (c.service_time / r) % 1.0
            else:
                res_service = c.service_time * frac / r
            a = max(c.window_start, new_shift_start)
            b = min(c.window_end, vehicle.shift_end)
            if a > b:
                raise InfeasibleCustomerError(
                    c.id,
                    f"customer {c.id}: residual window collapses after split planning",
                )
            residual = replace(
                c,
                demand_weight=c.demand_weight * frac / r,
                demand_volume=c.demand_volume * frac / r,
                service_time=res_service,
                window_start=a,
                window_end=b,
            )
            residual_customers[i] = residual
            new_clones = trip_customers
            new_sources = [i] * full

        clones.extend(new_clones)
        clone_sources.extend(new_sources)
        fleet[vehicle.id] = replace(vehicle, shift_start=new_shift_start)
        plans.append(
            SplitPlan(
                customer_id=c.id,
                vehicle_id=vehicle.id,
                full_trip_count=full,
                pre_routes=(),  # scheduled below, against the residual instance
                residual_customer=residual if residual is not None else trip_customers[-1],
                adjusted_shift_start=new_shift_start,
                departure_base=max(instance.depot.open, vehicle.shift_start),
                trip_duration=trip_duration,
                trip_ids=tuple(trip_ids),
            )
        )

    if not plans:
        return [], instance

    matrix = _append_clone_rows(instance.matrix, clone_sources)
    residual_instance = ProblemInstance(
        depot=instance.depot,
        customers=tuple(residual_customers) + tuple(clones),
        fleet=tuple(fleet[vid] for vid in fleet_order),
        matrix=matrix,
        name=instance.name,
    )

    # Schedule the fixed trips back-to-back from the planned departure base
    # (already past any earlier split trips of the same vehicle).
    scheduled_plans = []
    for plan in plans:
        pre_routes = []
        for j, tid in enumerate(plan.trip_ids):
            route = Route(customers=(tid,), vehicle=plan.vehicle_id)
            departure = plan.departure_base + j * plan.trip_duration
            pre_routes.append(schedule_route(route, residual_instance, departure=departure))
        scheduled_plans.append(replace(plan, pre_routes=tuple(pre_routes)))

    return scheduled_plans, residual_instance


def apply_service_time_transform(instance: ProblemInstance):
    """Fold unloading times into travel times and windows; service becomes 0."""
    s = np.array([c.service_time for c in instance.customers], dtype=float)
    half = s / 2.0

    m = instance.matrix
    between = m.between + half[:, None] + half[None, :]
    np.fill_diagonal(between, np.diag(m.between))
    depot_to = m.depot_to + half
    to_depot = m.to_depot + half

    new_customers = []
    for c, h in zip(instance.customers, half):
        a = c.window_start + h
        b = c.window_end - h
        if b < a:
            raise InfeasibleCustomerError(
                c.id,
                f"customer {c.id}: window shorter than service time "
                f"({c.window_end - c.window_start} < {c.service_time})",
            )
        new_customers.append(replace(c, window_start=a, window_end=b, service_time=0.0))

    transformed = replace(
        instance,
        customers=tuple(new_customers),
        matrix=TimeMatrix(depot_to=depot_to, to_depot=to_depot, between=between,
                          distances=m.distances),
    )
    return transformed, TransformRecord(original=instance, transformed=transformed)


def invert_service_time_transform(solution: Solution, record: TransformRecord,
                                  params=None) -> Solution:
    """Reschedule every route against the untouched instance.

    Pre-routes were planned before the fold and already live in the original
    frame; only the optimized routes need remapping.
    """
    original = record.original
    known = {c.id for c in original.customers}
    inverted = []
    for route in solution.routes:
        for cid in route.customers:
            if cid not in known:
                raise ContractError(
                    f"invert_service_time_transform: customer {cid!r} not in the recorded instance"
                )
        bare = Route(customers=route.customers, vehicle=route.vehicle)
        inverted.append(schedule_route(bare, original, params))
    return Solution(routes=tuple(inverted), pre_routes=solution.pre_routes)
