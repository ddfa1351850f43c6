"""Domain types: customers, vehicles, routes, solutions, and feasibility checks.

All types are value objects: once constructed they are never mutated, so
instances and solutions can be shared freely.  Scheduling and validation
return new objects or reports instead of updating in place.

Time is always minutes, distance is kilometres, weight kg, volume m3.
A customer's time window bounds the *completion* of its service: a stop is
late when service ends after ``window_end``.  Parsers that read formats with
start-of-service windows convert on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ContractError, InstanceError, PartitionError

#: Reserved vehicle id for overflow routes.  The fictitious vehicle has the
#: largest allowed capacities, an unbounded shift, and a deliberately high
#: per-km cost so later stages are pushed to remove it.
FICTITIOUS = "__fictitious__"


@dataclass(frozen=True)
class Customer:
    id: object
    x: float
    y: float
    demand_weight: float
    demand_volume: float
    window_start: float
    window_end: float
    service_time: float
    #: None means every vehicle may serve this customer.
    admissible_vehicles: Optional[frozenset] = None
    city: Optional[str] = None
    articles: int = 0

    def __post_init__(self):
        if self.window_start > self.window_end:
            raise InstanceError(
                f"customer {self.id}: window_start {self.window_start} > window_end {self.window_end}"
            )
        if self.service_time < 0 or self.demand_weight < 0 or self.demand_volume < 0:
            raise InstanceError(f"customer {self.id}: negative demand or service time")

    def admits(self, vehicle_id) -> bool:
        if vehicle_id == FICTITIOUS:
            return True
        return self.admissible_vehicles is None or vehicle_id in self.admissible_vehicles


@dataclass(frozen=True)
class Vehicle:
    id: object
    max_weight: float
    max_volume: float
    variable_cost: float
    fixed_cost: float = 0.0
    shift_start: float = 0.0
    shift_end: float = math.inf

    def __post_init__(self):
        if self.max_weight <= 0 or self.max_volume <= 0 or self.variable_cost <= 0:
            raise InstanceError(f"vehicle {self.id}: capacities and variable cost must be positive")
        if self.shift_start > self.shift_end:
            raise InstanceError(f"vehicle {self.id}: shift_start > shift_end")


@dataclass(frozen=True)
class Depot:
    x: float
    y: float
    open: float = 0.0
    close: float = math.inf

    def __post_init__(self):
        if self.open > self.close:
            raise InstanceError("depot: open > close")


@dataclass(frozen=True)
class MatrixBlock:
    """Square customer matrix plus the two depot vectors, one unit of measure."""

    depot_to: np.ndarray   # (n,)  depot -> customer i
    to_depot: np.ndarray   # (n,)  customer i -> depot
    between: np.ndarray    # (n, n)

    def full(self) -> np.ndarray:
        """(n+1)x(n+1) array with index 0 = depot."""
        n = len(self.depot_to)
        out = np.zeros((n + 1, n + 1))
        out[0, 1:] = self.depot_to
        out[1:, 0] = self.to_depot
        out[1:, 1:] = self.between
        return out


@dataclass(frozen=True)
class TimeMatrix:
    """Travel times in minutes plus the matching distances in km."""

    depot_to: np.ndarray
    to_depot: np.ndarray
    between: np.ndarray
    distances: MatrixBlock

    def time_block(self) -> MatrixBlock:
        return MatrixBlock(self.depot_to, self.to_depot, self.between)


@dataclass(frozen=True)
class ControlParams:
    """All named constants steering the four solve steps.

    ``biggest_capacity_weight``/``volume`` default to the largest vehicle in
    the fleet when left unset.
    """

    biggest_capacity_weight: Optional[float] = None
    biggest_capacity_volume: Optional[float] = None
    additional_vehicle_cost: float = 2.0
    number_of_iterations: int = 25000
    tolerance_weight: float = 50.0
    tolerance_volume: float = 0.1
    tabu_tenure: int = 30
    penalty_delay: float = 0.5
    lambda_: float = 0.001
    penalty_customers_vehicles: float = 400.0
    cost_increasing: float = 0.2
    penalty_percentage_volume: float = 400.0
    penalty_percentage_weight: float = 400.0
    elimination_iterations: int = 100
    reassign_period: int = 1000
    brute_force_fleet_limit: int = 10
    savings_similarity_factor: float = 3.0

    def validate(self):
        for name, value in self.__dict__.items():
            if value is not None and value < 0:
                raise InstanceError(f"control parameter {name} must be >= 0, got {value}")
        if self.number_of_iterations < 1:
            raise InstanceError("number_of_iterations must be >= 1")
        return self

    def resolved(self, fleet) -> "ControlParams":
        """Fill the biggest-capacity defaults from the fleet."""
        big_w = self.biggest_capacity_weight
        big_v = self.biggest_capacity_volume
        if big_w is None:
            big_w = max((v.max_weight for v in fleet), default=1.0)
        if big_v is None:
            big_v = max((v.max_volume for v in fleet), default=1.0)
        return replace(self, biggest_capacity_weight=big_w, biggest_capacity_volume=big_v)


@dataclass(frozen=True)
class ProblemInstance:
    depot: Depot
    customers: tuple
    fleet: tuple
    matrix: TimeMatrix
    name: str = ""

    def __post_init__(self):
        ids = [c.id for c in self.customers]
        if len(set(ids)) != len(ids):
            raise InstanceError("duplicate customer ids")
        vids = [v.id for v in self.fleet]
        if len(set(vids)) != len(vids):
            raise InstanceError("duplicate vehicle ids")
        object.__setattr__(self, "_index", {c.id: i for i, c in enumerate(self.customers)})
        object.__setattr__(self, "_vehicles", {v.id: v for v in self.fleet})

    @property
    def n(self) -> int:
        return len(self.customers)

    def customer(self, cid) -> Customer:
        try:
            return self.customers[self._index[cid]]
        except KeyError:
            raise InstanceError(f"unknown customer id {cid!r}") from None

    def customer_index(self, cid) -> int:
        try:
            return self._index[cid]
        except KeyError:
            raise InstanceError(f"unknown customer id {cid!r}") from None

    def vehicle(self, vid, params: Optional[ControlParams] = None) -> Vehicle:
        if vid == FICTITIOUS:
            p = (params or ControlParams()).resolved(self.fleet)
            return Vehicle(
                id=FICTITIOUS,
                max_weight=p.biggest_capacity_weight,
                max_volume=p.biggest_capacity_volume,
                variable_cost=p.additional_vehicle_cost,
                fixed_cost=0.0,
                shift_start=-math.inf,
                shift_end=math.inf,
            )
        try:
            return self._vehicles[vid]
        except KeyError:
            raise InstanceError(f"unknown vehicle id {vid!r}") from None

    def travel_time(self, a, b) -> float:
        """Travel time between two customer ids; None stands for the depot."""
        if a is None:
            return 0.0 if b is None else float(self.matrix.depot_to[self._index[b]])
        if b is None:
            return float(self.matrix.to_depot[self._index[a]])
        return float(self.matrix.between[self._index[a], self._index[b]])

    def distance(self, a, b) -> float:
        d = self.matrix.distances
        if a is None:
            return 0.0 if b is None else float(d.depot_to[self._index[b]])
        if b is None:
            return float(d.to_depot[self._index[a]])
        return float(d.between[self._index[a], self._index[b]])


@dataclass(frozen=True)
class Route:
    """An ordered customer visit sequence plus the vehicle that drives it."""

    customers: tuple
    vehicle: object = None
    schedule: Optional[tuple] = None  # per stop: (arrival, service_start, service_end)
    depot_departure: Optional[float] = None
    depot_return: Optional[float] = None
    total_distance: Optional[float] = None
    total_weight: Optional[float] = None
    total_volume: Optional[float] = None

    def __post_init__(self):
        if len(set(self.customers)) != len(self.customers):
            raise InstanceError("duplicate customer within a route")

    def __len__(self):
        return len(self.customers)


@dataclass(frozen=True)
class Solution:
    routes: tuple
    pre_routes: tuple = ()

    def all_routes(self):
        return tuple(self.routes) + tuple(self.pre_routes)


def build_time_matrix(customers, depot: Depot) -> TimeMatrix:
    """Euclidean distances in full double precision; times equal distances.

    Benchmark-style instances derive both from coordinates.  Instances with
    measured road matrices bypass this and supply them directly.
    """
    xs = np.array([c.x for c in customers], dtype=float)
    ys = np.array([c.y for c in customers], dtype=float)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys)) and
            math.isfinite(depot.x) and math.isfinite(depot.y)):
        raise InstanceError("coordinates must be finite to build a Euclidean matrix")
    depot_to = np.hypot(xs - depot.x, ys - depot.y)
    between = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    dist = MatrixBlock(depot_to=depot_to, to_depot=depot_to.copy(), between=between)
    return TimeMatrix(
        depot_to=depot_to.copy(),
        to_depot=depot_to.copy(),
        between=between.copy(),
        distances=dist,
    )


def schedule_route(route: Route, instance: ProblemInstance,
                   params: Optional[ControlParams] = None,
                   departure: Optional[float] = None) -> Route:
    """Earliest-arrival schedule: wait for window starts, never leave early.

    Departure defaults to max(depot open, vehicle shift start); split-delivery
    pre-routes pass an explicit later departure.
    """
    if route.vehicle is None:
        raise ContractError("schedule_route: route has no vehicle assigned")
    vehicle = instance.vehicle(route.vehicle, params)
    if departure is None:
        departure = max(instance.depot.open, vehicle.shift_start)

    t = departure
    prev = None
    schedule = []
    total_d = 0.0
    total_w = 0.0
    total_v = 0.0
    for cid in route.customers:
        c = instance.customer(cid)
        arrival = t + instance.travel_time(prev, cid)
        start = max(arrival, c.window_start)
        end = start + c.service_time
        schedule.append((arrival, start, end))
        total_d += instance.distance(prev, cid)
        total_w += c.demand_weight
        total_v += c.demand_volume
        t = end
        prev = cid
    depot_return = t + instance.travel_time(prev, None)
    total_d += instance.distance(prev, None)
    return replace(
        route,
        schedule=tuple(schedule),
        depot_departure=departure,
        depot_return=depot_return,
        total_distance=total_d,
        total_weight=total_w,
        total_volume=total_v,
    )


@dataclass
class RouteViolations:
    weight_overload: float = 0.0
    volume_overload: float = 0.0
    delays: dict = field(default_factory=dict)       # customer id -> minutes late
    sdvrp: list = field(default_factory=list)        # customer ids on a wrong vehicle
    depot_return_late: float = 0.0                   # minutes past depot close
    shift_violation: float = 0.0                     # minutes outside the vehicle shift
    uses_fictitious: bool = False

    _EPS = 1e-9

    @property
    def clean(self) -> bool:
        return (self.weight_overload <= self._EPS and self.volume_overload <= self._EPS
                and not self.delays and not self.sdvrp
                and self.depot_return_late <= self._EPS and self.shift_violation <= self._EPS
                and not self.uses_fictitious)


@dataclass
class FeasibilityReport:
    violations: list  # RouteViolations, aligned with solution.all_routes()

    @property
    def feasible(self) -> bool:
        return all(v.clean for v in self.violations)

    def summary(self) -> str:
        lines = []
        for i, v in enumerate(self.violations):
            if v.clean:
                continue
            parts = []
            if v.uses_fictitious:
                parts.append("fictitious vehicle in use")
            if v.weight_overload > v._EPS:
                parts.append(f"weight overload {v.weight_overload:.3f} kg")
            if v.volume_overload > v._EPS:
                parts.append(f"volume overload {v.volume_overload:.4f} m3")
            for cid, minutes in v.delays.items():
                parts.append(f"customer {cid} late by {minutes:.2f} min")
            for cid in v.sdvrp:
                parts.append(f"customer {cid} on inadmissible vehicle")
            if v.depot_return_late > v._EPS:
                parts.append(f"returns {v.depot_return_late:.2f} min after depot close")
            if v.shift_violation > v._EPS:
                parts.append(f"outside vehicle shift by {v.shift_violation:.2f} min")
            lines.append(f"route {i}: " + "; ".join(parts))
        return "\n".join(lines) if lines else "feasible"


def validate_solution(solution: Solution, instance: ProblemInstance,
                      params: Optional[ControlParams] = None) -> FeasibilityReport:
    """Full feasibility audit; raises PartitionError on ill-formed coverage.

    Split-delivery pre-routes deliberately run before their vehicle's
    adjusted shift start (the adjustment reserves that time for them), so the
    early-departure check does not apply to them.
    """
    params = (params or ControlParams()).resolved(instance.fleet)
    eps = 1e-9

    seen = {}
    for route in solution.all_routes():
        for cid in route.customers:
            seen[cid] = seen.get(cid, 0) + 1
    expected = {c.id for c in instance.customers}
    duplicated = sorted((str(k) for k, v in seen.items() if v > 1))
    missing = sorted(str(k) for k in expected - seen.keys())
    unknown = sorted(str(k) for k in seen.keys() - expected)
    if duplicated or missing or unknown:
        raise PartitionError(
            f"solution does not partition the customers: "
            f"missing={missing} duplicated={duplicated} unknown={unknown}"
        )

    violations = []
    n_main = len(solution.routes)
    for ridx, route in enumerate(solution.all_routes()):
        is_pre = ridx >= n_main
        v = RouteViolations()
        if route.vehicle == FICTITIOUS and len(route) > 0:
            v.uses_fictitious = True
        vehicle = instance.vehicle(route.vehicle, params)
        scheduled = schedule_route(route, instance, params, departure=route.depot_departure)
        if scheduled.total_weight - vehicle.max_weight > eps:
            v.weight_overload = scheduled.total_weight - vehicle.max_weight
        if scheduled.total_volume - vehicle.max_volume > eps:
            v.volume_overload = scheduled.total_volume - vehicle.max_volume
        for cid, (_, _, end) in zip(route.customers, scheduled.schedule):
            c = instance.customer(cid)
            if end - c.window_end > eps:
                v.delays[cid] = end - c.window_end
            if not c.admits(route.vehicle):
                v.sdvrp.append(cid)
        if scheduled.depot_return - instance.depot.close > eps:
            v.depot_return_late = scheduled.depot_return - instance.depot.close
        late = max(0.0, scheduled.depot_return - vehicle.shift_end)
        early = 0.0
        if len(route) and not is_pre:
            early = max(0.0, vehicle.shift_start - scheduled.depot_departure)
        if late + early > eps:
            v.shift_violation = late + early
        violations.append(v)
    return FeasibilityReport(violations=violations)
