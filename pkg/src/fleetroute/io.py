"""Instance and solution I/O.

Reads the classic whitespace-delimited VRPTW benchmark layout (Solomon and
the Gehring-Homberger extensions) and a JSON-based extended format carrying
the full heterogeneous-fleet model.  Writes solutions as plain text, JSON,
or GeoJSON, and compares costs against a checked-in best-known-solutions
table.

Window semantics on load: the core model treats ``window_end`` as the latest
allowed *completion* of service, while benchmark files give the latest
allowed *start*.  The parser therefore maps ``window_end = due + service``,
which is exactly equivalent to the published start-in-window rule.  The
extended format declares completion windows natively.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .costs import CostMode, route_cost_components, solution_cost
from .errors import InstanceError, ParseError
from .model import (
    Customer,
    Depot,
    MatrixBlock,
    ProblemInstance,
    Route,
    Solution,
    TimeMatrix,
    Vehicle,
    build_time_matrix,
    schedule_route,
    validate_solution,
)

EXTENDED_FORMAT_VERSION = 1

_DISTANCE_UNITS = {"km": 1.0, "m": 0.001}
_TIME_UNITS = {"min": 1.0, "s": 1.0 / 60.0, "sec": 1.0 / 60.0, "h": 60.0, "hour": 60.0}
_WEIGHT_UNITS = {"kg": 1.0, "t": 1000.0, "g": 0.001}
_VOLUME_UNITS = {"m3": 1.0, "l": 0.001}


# ---------------------------------------------------------------------------
# Solomon / Homberger benchmark format
# ---------------------------------------------------------------------------

def parse_solomon(text: str, name: Optional[str] = None) -> ProblemInstance:
    """Parse the whitespace-delimited benchmark layout.

    Homogeneous fleet of NUMBER vehicles with weight capacity Q, unit per-km
    cost, unbounded shifts; every customer admissible to every vehicle;
    Euclidean distances in full double precision, travel times equal.
    """
    lines = text.splitlines()
    header = None
    veh_row = None
    customer_rows = []
    section = "head"
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("VEHICLE"):
            section = "vehicle"
            continue
        if upper.startswith("CUSTOMER"):
            section = "customer"
            continue
        if upper.startswith("NUMBER") or upper.startswith("CUST"):
            continue
        fields = line.split()
        if section == "head":
            if header is None:
                header = line
            continue
        if section == "vehicle":
            if veh_row is None:
                if len(fields) != 2:
                    raise ParseError(f"expected 'NUMBER CAPACITY', got {line!r}", line=lineno)
                try:
                    veh_row = (int(float(fields[0])), float(fields[1]))
                except ValueError:
                    raise ParseError(f"bad vehicle row {line!r}", line=lineno) from None
            continue
        if len(fields) != 7:
            raise ParseError(
                f"customer row needs 7 fields (id x y demand ready due service), got {len(fields)}",
                line=lineno,
            )
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-numeric customer row {line!r}", line=lineno) from None
        customer_rows.append((lineno, row))

    if veh_row is None:
        raise ParseError("missing VEHICLE section")
    if not customer_rows:
        raise ParseError("missing CUSTOMER rows (need at least the depot, id 0)")

    n_vehicles, capacity = veh_row
    depot_row = None
    customers = []
    for lineno, row in customer_rows:
        cid, x, y, demand, ready, due, service = row
        if int(cid) == 0:
            depot_row = row
            continue
        customers.append(
            Customer(
                id=int(cid), x=x, y=y,
                demand_weight=demand, demand_volume=0.0,
                window_start=ready,
                window_end=due + service,  # completion deadline
                service_time=service,
            )
        )
    if depot_row is None:
        raise ParseError("no depot row (customer id 0)")
    depot = Depot(x=depot_row[1], y=depot_row[2], open=depot_row[4], close=depot_row[5])
    fleet = tuple(
        Vehicle(id=f"V{k + 1}", max_weight=capacity, max_volume=1.0, variable_cost=1.0)
        for k in range(n_vehicles)
    )
    matrix = build_time_matrix(customers, depot)
    return ProblemInstance(depot=depot, customers=tuple(customers), fleet=fleet,
                           matrix=matrix, name=name or (header or "unnamed"))


# ---------------------------------------------------------------------------
# extended JSON format
# ---------------------------------------------------------------------------

def _need(doc: dict, key: str, path: str):
    if key not in doc:
        raise ParseError(f"missing required field '{key}'", path=path)
    return doc[key]


def _unit(doc: dict, key: str, table: dict, path: str) -> float:
    value = _need(doc, key, path)
    if value not in table:
        raise ParseError(f"unsupported {key} unit {value!r} (one of {sorted(table)})", path=path)
    return table[value]


def parse_extended(text: str) -> ProblemInstance:
    """Parse the self-describing JSON instance format (see README)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    version = _need(doc, "format_version", "$")
    if version != EXTENDED_FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version}", path="$.format_version")

    units = _need(doc, "units", "$")
    f_dist = _unit(units, "distance", _DISTANCE_UNITS, "$.units")
    f_time = _unit(units, "time", _TIME_UNITS, "$.units")
    f_weight = _unit(units, "weight", _WEIGHT_UNITS, "$.units")
    f_volume = _unit(units, "volume", _VOLUME_UNITS, "$.units")

    dd = _need(doc, "depot", "$")
    depot = Depot(
        x=float(_need(dd, "x", "$.depot")),
        y=float(_need(dd, "y", "$.depot")),
        open=float(dd.get("open", 0.0)) * f_time,
        close=float(dd.get("close", math.inf)) * f_time if dd.get("close") is not None else math.inf,
    )

    fleet = []
    for i, vd in enumerate(_need(doc, "fleet", "$")):
        path = f"$.fleet[{i}]"
        shift_end = vd.get("shift_end")
        fleet.append(
            Vehicle(
                id=_need(vd, "id", path),
                max_weight=float(_need(vd, "max_weight", path)) * f_weight,
                max_volume=float(_need(vd, "max_volume", path)) * f_volume,
                variable_cost=float(_need(vd, "variable_cost", path)),
                fixed_cost=float(vd.get("fixed_cost", 0.0)),
                shift_start=float(vd.get("shift_start", 0.0)) * f_time,
                shift_end=float(shift_end) * f_time if shift_end is not None else math.inf,
            )
        )
    vehicle_ids = {v.id for v in fleet}

    customers = []
    for i, cd in enumerate(_need(doc, "customers", "$")):
        path = f"$.customers[{i}]"
        admissible = cd.get("admissible_vehicles")
        if admissible is not None:
            unknown = set(admissible) - vehicle_ids
            if unknown:
                raise ParseError(f"admissible vehicle ids {sorted(unknown)} not in fleet", path=path)
            admissible = frozenset(admissible)
        customers.append(
            Customer(
                id=_need(cd, "id", path),
                x=float(_need(cd, "x", path)),
                y=float(_need(cd, "y", path)),
                demand_weight=float(_need(cd, "demand_weight", path)) * f_weight,
                demand_volume=float(_need(cd, "demand_volume", path)) * f_volume,
                window_start=float(_need(cd, "window_start", path)) * f_time,
                window_end=float(_need(cd, "window_end", path)) * f_time,
                service_time=float(_need(cd, "service_time", path)) * f_time,
                admissible_vehicles=admissible,
                city=cd.get("city"),
                articles=int(cd.get("articles", 0)),
            )
        )

    matrices = doc.get("matrices") or {}
    n = len(customers)
    if matrices.get("distance") is not None or matrices.get("time") is not None:
        dist = matrices.get("distance")
        tmat = matrices.get("time")
        base = np.asarray(dist, dtype=float) * f_dist if dist is not None else None
        tarr = np.asarray(tmat, dtype=float) * f_time if tmat is not None else None
        if base is None:
            base = tarr.copy()
        if tarr is None:
            tarr = base.copy()
        for mname, marr in (("distance", base), ("time", tarr)):
            if marr.shape != (n + 1, n + 1):
                raise ParseError(
                    f"{mname} matrix must be {(n + 1, n + 1)} (index 0 = depot), got {marr.shape}",
                    path=f"$.matrices.{mname}",
                )
            if np.any(marr < 0) or not np.all(np.isfinite(marr)):
                raise ParseError(f"{mname} matrix entries must be finite and >= 0",
                                 path=f"$.matrices.{mname}")
        matrix = TimeMatrix(
            depot_to=tarr[0, 1:].copy(), to_depot=tarr[1:, 0].copy(),
            between=tarr[1:, 1:].copy(),
            distances=MatrixBlock(depot_to=base[0, 1:].copy(), to_depot=base[1:, 0].copy(),
                                  between=base[1:, 1:].copy()),
        )
    else:
        matrix = build_time_matrix(customers, depot)

    return ProblemInstance(depot=depot, customers=tuple(customers), fleet=tuple(fleet),
                           matrix=matrix, name=doc.get("name", "unnamed"))


def write_extended(instance: ProblemInstance, explicit_matrices: bool = False) -> str:
    """Serialize an instance to the extended JSON format (round-trips)."""
    doc = {
        "format_version": EXTENDED_FORMAT_VERSION,
        "name": instance.name,
        "units": {"distance": "km", "time": "min", "weight": "kg", "volume": "m3"},
        "depot": {
            "x": instance.depot.x, "y": instance.depot.y,
            "open": instance.depot.open,
            "close": None if math.isinf(instance.depot.close) else instance.depot.close,
        },
        "fleet": [
            {
                "id": v.id, "max_weight": v.max_weight, "max_volume": v.max_volume,
                "variable_cost": v.variable_cost, "fixed_cost": v.fixed_cost,
                "shift_start": v.shift_start,
                "shift_end": None if math.isinf(v.shift_end) else v.shift_end,
            }
            for v in instance.fleet
        ],
        "customers": [
            {
                "id": c.id, "x": c.x, "y": c.y,
                "demand_weight": c.demand_weight, "demand_volume": c.demand_volume,
                "window_start": c.window_start, "window_end": c.window_end,
                "service_time": c.service_time,
                **({"admissible_vehicles": sorted(c.admissible_vehicles)}
                   if c.admissible_vehicles is not None else {}),
                **({"city": c.city} if c.city is not None else {}),
                **({"articles": c.articles} if c.articles else {}),
            }
            for c in instance.customers
        ],
    }
    if explicit_matrices:
        doc["matrices"] = {
            "distance": instance.matrix.distances.full().tolist(),
            "time": instance.matrix.time_block().full().tolist(),
        }
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# solution output
# ---------------------------------------------------------------------------

def write_solution(solution: Solution, instance: ProblemInstance,
                   format: str = "text", params=None) -> str:
    """Render a solution; formats: text, json (round-trips), geojson."""
    if format == "text":
        return _solution_text(solution, instance, params)
    if format == "json":
        return _solution_json(solution, instance, params)
    if format == "geojson":
        return _solution_geojson(solution, instance)
    raise ValueError(f"unknown solution format {format!r}")


def _route_record(route: Route, instance, params, pre: bool) -> dict:
    comps = route_cost_components(route, instance, params)
    return {
        "vehicle": route.vehicle,
        "customers": list(route.customers),
        "pre_route": pre,
        "departure": route.depot_departure,
        "depot_return": route.depot_return,
        "distance": route.total_distance,
        "load_weight": route.total_weight,
        "load_volume": route.total_volume,
        "schedule": [list(s) for s in route.schedule],
        "cost_components": {
            "rrc": comps.rrc, "pd": comps.pd, "pv": comps.pv, "pw": comps.pw,
            "pcv": comps.pcv, "ppw": comps.ppw, "total": comps.total,
        },
    }


def _solution_json(solution, instance, params) -> str:
    doc = {
        "format_version": 1,
        "instance": instance.name,
        "routes": [_route_record(r, instance, params, False) for r in solution.routes]
                  + [_route_record(r, instance, params, True) for r in solution.pre_routes],
        "total_cost": solution_cost(solution, instance, params),
        "total_distance": sum(r.total_distance or 0.0 for r in solution.all_routes()),
        "vehicles_used": len({r.vehicle for r in solution.all_routes() if len(r)}),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _solution_text(solution, instance, params) -> str:
    lines = [f"solution for {instance.name}: {len(solution.routes)} routes"
             + (f" + {len(solution.pre_routes)} fixed split-delivery trips"
                if solution.pre_routes else "")]
    total = 0.0
    dist = 0.0
    for label, routes in (("route", solution.routes), ("pre-route", solution.pre_routes)):
        for i, r in enumerate(routes):
            comps = route_cost_components(r, instance, params)
            total += comps.total
            dist += r.total_distance
            stops = "  ".join(
                f"{cid}@{arr:.1f}" for cid, (arr, _, _) in zip(r.customers, r.schedule)
            )
            lines.append(
                f"{label} {i} [vehicle {r.vehicle}] cost {comps.total:.3f} "
                f"(rrc {comps.rrc:.3f}, pd {comps.pd:.3f}, pv {comps.pv:.3f}, "
                f"pw {comps.pw:.3f}, pcv {comps.pcv:.3f}, ppw {comps.ppw:.3f}) "
                f"distance {r.total_distance:.3f}: depot  {stops}  depot@{r.depot_return:.1f}"
            )
    lines.append(f"total cost {total:.3f}  total distance {dist:.3f}")
    return "\n".join(lines) + "\n"


def _solution_geojson(solution, instance) -> str:
    features = []
    for ridx, route in enumerate(solution.all_routes()):
        coords = [[instance.depot.x, instance.depot.y]]
        for seq, cid in enumerate(route.customers, start=1):
            c = instance.customer(cid)
            coords.append([c.x, c.y])
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [c.x, c.y]},
                "properties": {"route": ridx, "sequence": seq, "customer": str(cid),
                               "vehicle": str(route.vehicle)},
            })
        coords.append([instance.depot.x, instance.depot.y])
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {"route": ridx, "vehicle": str(route.vehicle),
                           "stops": len(route.customers)},
        })
    features.append({
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [instance.depot.x, instance.depot.y]},
        "properties": {"depot": True},
    })
    return json.dumps({"type": "FeatureCollection", "features": features}, indent=2)


def load_solution(text: str, instance: ProblemInstance, params=None) -> Solution:
    """Rebuild a Solution from its JSON form (schedules recomputed)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid solution JSON: {exc}") from None
    routes = []
    pre = []
    for i, rd in enumerate(doc.get("routes", [])):
        path = f"$.routes[{i}]"
        customers = tuple(_need(rd, "customers", path))
        route = Route(customers=customers, vehicle=_need(rd, "vehicle", path))
        route = schedule_route(route, instance, params, departure=rd.get("departure"))
        (pre if rd.get("pre_route") else routes).append(route)
    return Solution(routes=tuple(routes), pre_routes=tuple(pre))


# ---------------------------------------------------------------------------
# best-known solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BksEntry:
    name: str
    cost: float
    vehicles: int

    def __post_init__(self):
        if self.cost <= 0 or self.vehicles < 1:
            raise InstanceError(f"bad BKS entry {self.name}")


@dataclass(frozen=True)
class GapReport:
    instance: str
    cost: float
    bks_cost: float
    gap_pct: float
    vehicles: Optional[int] = None
    bks_vehicles: Optional[int] = None

    @property
    def vehicle_delta(self) -> Optional[int]:
        if self.vehicles is None or self.bks_vehicles is None:
            return None
        return self.vehicles - self.bks_vehicles


def load_bks(path: Optional[str] = None) -> dict:
    """name -> BksEntry from a 'name cost vehicles' text table."""
    if path is None:
        text = resources.files("fleetroute").joinpath("data/bks_sintef.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    table = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError("BKS rows are 'name cost vehicles'", line=lineno)
        entry = BksEntry(name=fields[0].lower(), cost=float(fields[1]), vehicles=int(fields[2]))
        table[entry.name] = entry
    return table


def compare_to_bks(cost: float, entry: BksEntry,
                   vehicles: Optional[int] = None) -> GapReport:
    gap = (cost - entry.cost) / entry.cost * 100.0
    return GapReport(instance=entry.name, cost=cost, bks_cost=entry.cost,
                     gap_pct=gap, vehicles=vehicles, bks_vehicles=entry.vehicles)
