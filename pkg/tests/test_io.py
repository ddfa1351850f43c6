import json
import math

import numpy as np
import pytest

from fleetroute.errors import ParseError
from fleetroute.io import (
    BksEntry,
    compare_to_bks,
    load_bks,
    load_solution,
    parse_extended,
    parse_solomon,
    write_extended,
    write_solution,
)
from fleetroute.model import Route, Solution, schedule_route, validate_solution
from conftest import make_instance

MINI_SOLOMON = """\
MINI5

VEHICLE
NUMBER     CAPACITY
   3         200

CUSTOMER
CUST NO.   XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME

    0      40         50          0          0       1236          0
    1      45         68         10        912        967         90
    2      45         70         30        825        870         90
    3      42         66         10         65        146         90
    4      42         68         10        727        782         90
    5      42         65         10         15         67         90
"""

DEPOT_ONLY = """\
EMPTY1

VEHICLE
NUMBER     CAPACITY
   2         100

CUSTOMER
CUST NO.   XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME

    0      10         10          0          0        500          0
"""


class TestParseSolomon:
    def test_mini_instance(self):
        inst = parse_solomon(MINI_SOLOMON)
        assert inst.name == "MINI5"
        assert inst.n == 5
        assert len(inst.fleet) == 3
        assert inst.fleet[0].max_weight == 200.0
        assert inst.fleet[0].variable_cost == 1.0
        assert all(c.admissible_vehicles is None for c in inst.customers)
        assert inst.depot.open == 0.0 and inst.depot.close == 1236.0

    def test_completion_window_mapping(self):
        # 'due date' bounds the service start; the model bounds completion,
        # so window_end = due + service
        inst = parse_solomon(MINI_SOLOMON)
        c1 = inst.customer(1)
        assert c1.window_start == 912.0
        assert c1.window_end == 967.0 + 90.0
        assert c1.service_time == 90.0

    def test_euclidean_full_precision(self):
        inst = parse_solomon(MINI_SOLOMON)
        assert inst.distance(None, 1) == pytest.approx(math.hypot(45 - 40, 68 - 50), abs=0)
        assert inst.travel_time(None, 1) == inst.distance(None, 1)

    def test_depot_only_file(self):
        inst = parse_solomon(DEPOT_ONLY)
        assert inst.n == 0
        assert len(inst.fleet) == 2

    def test_truncated_row_names_line(self):
        broken = MINI_SOLOMON.replace("    5      42         65         10         15         67         90",
                                      "    5      42         65")
        with pytest.raises(ParseError) as err:
            parse_solomon(broken)
        assert "line" in str(err.value)

    def test_missing_vehicle_section(self):
        with pytest.raises(ParseError):
            parse_solomon("NAME\nCUSTOMER\n0 1 2 0 0 10 0\n")


class TestExtendedFormat:
    def doc(self):
        return {
            "format_version": 1,
            "name": "tiny",
            "units": {"distance": "km", "time": "min", "weight": "kg", "volume": "m3"},
            "depot": {"x": 0.0, "y": 0.0, "open": 0.0, "close": 600.0},
            "fleet": [
                {"id": "V1", "max_weight": 1000, "max_volume": 10, "variable_cost": 1.0},
                {"id": "V2", "max_weight": 2000, "max_volume": 20, "variable_cost": 1.5,
                 "shift_start": 60.0, "shift_end": 480.0},
            ],
            "customers": [
                {"id": "C1", "x": 3.0, "y": 4.0, "demand_weight": 100, "demand_volume": 1.0,
                 "window_start": 0, "window_end": 300, "service_time": 10,
                 "admissible_vehicles": ["V2"], "city": "east", "articles": 12},
                {"id": "C2", "x": 6.0, "y": 8.0, "demand_weight": 50, "demand_volume": 0.5,
                 "window_start": 30, "window_end": 400, "service_time": 5},
            ],
        }

    def test_round_trip(self):
        inst = parse_extended(json.dumps(self.doc()))
        again = parse_extended(write_extended(inst))
        assert again.customers == inst.customers
        assert again.fleet == inst.fleet
        assert again.depot == inst.depot
        np.testing.assert_array_equal(again.matrix.between, inst.matrix.between)

    def test_admissible_sets(self):
        inst = parse_extended(json.dumps(self.doc()))
        assert inst.customer("C1").admissible_vehicles == frozenset({"V2"})
        assert inst.customer("C2").admissible_vehicles is None

    def test_missing_units_is_error(self):
        doc = self.doc()
        del doc["units"]
        with pytest.raises(ParseError) as err:
            parse_extended(json.dumps(doc))
        assert "units" in str(err.value)

    def test_unit_conversion(self):
        doc = self.doc()
        doc["units"] = {"distance": "m", "time": "h", "weight": "t", "volume": "l"}
        inst = parse_extended(json.dumps(doc))
        assert inst.customer("C1").demand_weight == pytest.approx(100 * 1000.0)
        assert inst.customer("C1").demand_volume == pytest.approx(1.0 * 0.001)
        assert inst.customer("C1").service_time == pytest.approx(10 * 60.0)

    def test_unknown_admissible_vehicle(self):
        doc = self.doc()
        doc["customers"][0]["admissible_vehicles"] = ["NOPE"]
        with pytest.raises(ParseError) as err:
            parse_extended(json.dumps(doc))
        assert "customers[0]" in str(err.value)

    def test_explicit_asymmetric_time_matrix_used_verbatim(self):
        doc = self.doc()
        t = [[0.0, 10.0, 20.0],
             [5.0, 0.0, 7.0],
             [25.0, 9.0, 0.0]]
        doc["matrices"] = {"time": t}
        inst = parse_extended(json.dumps(doc))
        r = schedule_route(Route(customers=("C1", "C2"), vehicle="V1"), inst)
        # depart 0, arrive C1 at 10, serve [10, 20], travel 7 -> arrive C2 at 27
        assert r.schedule[0][0] == 10.0
        assert r.schedule[1][0] == pytest.approx(20.0 + 7.0)
        # distances fall back to the same numbers when only time is given
        assert inst.distance("C1", "C2") == 7.0

    def test_bad_matrix_shape(self):
        doc = self.doc()
        doc["matrices"] = {"time": [[0.0, 1.0], [1.0, 0.0]]}
        with pytest.raises(ParseError):
            parse_extended(json.dumps(doc))


class TestSolutionOutput:
    def fixture(self):
        inst = parse_extended(json.dumps(TestExtendedFormat().doc()))
        r1 = schedule_route(Route(customers=("C1",), vehicle="V2"), inst)
        r2 = schedule_route(Route(customers=("C2",), vehicle="V1"), inst)
        return inst, Solution(routes=(r1, r2))

    def test_empty_solution(self):
        inst, _ = self.fixture()
        doc = json.loads(write_solution(Solution(routes=()), inst, "json"))
        assert doc["routes"] == []
        assert doc["total_cost"] == 0.0

    def test_json_round_trip(self):
        inst, sol = self.fixture()
        text = write_solution(sol, inst, "json")
        again = load_solution(text, inst)
        assert [r.customers for r in again.routes] == [r.customers for r in sol.routes]
        assert [r.vehicle for r in again.routes] == [r.vehicle for r in sol.routes]
        assert [r.schedule for r in again.routes] == [r.schedule for r in sol.routes]
        assert write_solution(again, inst, "json") == text

    def test_text_format_mentions_components(self):
        inst, sol = self.fixture()
        text = write_solution(sol, inst, "text")
        assert "rrc" in text and "vehicle V2" in text and "total cost" in text

    def test_geojson_structure(self):
        inst, sol = self.fixture()
        doc = json.loads(write_solution(sol, inst, "geojson"))
        assert doc["type"] == "FeatureCollection"
        lines = [f for f in doc["features"] if f["geometry"]["type"] == "LineString"]
        points = [f for f in doc["features"] if f["geometry"]["type"] == "Point"
                  and "sequence" in f["properties"]]
        assert len(lines) == 2
        assert len(points) == 2
        assert points[0]["properties"]["sequence"] == 1
        # each line starts and ends at the depot
        for line in lines:
            assert line["geometry"]["coordinates"][0] == [inst.depot.x, inst.depot.y]
            assert line["geometry"]["coordinates"][-1] == [inst.depot.x, inst.depot.y]

    def test_pre_routes_round_trip_with_departure(self):
        inst, sol = self.fixture()
        pre = schedule_route(Route(customers=("C2",), vehicle="V1"), inst, departure=100.0)
        sol = Solution(routes=sol.routes[:1], pre_routes=(pre,))
        again = load_solution(write_solution(sol, inst, "json"), inst)
        assert len(again.pre_routes) == 1
        assert again.pre_routes[0].depot_departure == 100.0


class TestBks:
    def test_packaged_table_loads(self):
        table = load_bks()
        assert table["c101"].cost == 828.94
        assert table["c101"].vehicles == 10
        assert table["c1_2_1"].cost == 2704.57

    def test_zero_gap(self):
        gap = compare_to_bks(828.94, BksEntry("c101", 828.94, 10), vehicles=10)
        assert gap.gap_pct == 0.0
        assert gap.vehicle_delta == 0

    def test_positive_gap_with_fewer_vehicles(self):
        gap = compare_to_bks(1657.26, BksEntry("r101", 1650.8, 19), vehicles=18)
        assert gap.gap_pct == pytest.approx(0.39, abs=0.005)
        assert gap.vehicle_delta == -1

    def test_exact_equality(self):
        gap = compare_to_bks(100.0, BksEntry("x", 100.0, 5))
        assert gap.gap_pct == 0.0
