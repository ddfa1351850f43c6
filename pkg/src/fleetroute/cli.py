"""Command-line front end.

Subcommands: solve, validate, bench, tune, predict.  Exit codes: 0 success
(and feasible where that applies), 2 solved or validated with constraint
violations, 1 error.  ``FLEETROUTE_CONFIG`` names a default parameter overlay
applied before --params.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import math
import os
import sys
import time

import numpy as np

from . import advisor
from . import io as fio
from .errors import FleetRouteError
from .model import ControlParams
from .solver import solve

CONFIG_ENV = "FLEETROUTE_CONFIG"


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_params(path=None) -> ControlParams:
    """Defaults, overlaid with the env config file and then the given file."""
    params = ControlParams()
    for source in (os.environ.get(CONFIG_ENV), path):
        if not source:
            continue
        doc = json.loads(_read(source))
        fields = {f.name for f in dataclasses.fields(ControlParams)}
        updates = {}
        for key, value in doc.items():
            name = "lambda_" if key == "lambda" else key
            if name not in fields:
                raise FleetRouteError(f"unknown control parameter {key!r} in {source}")
            updates[name] = value
        params = dataclasses.replace(params, **updates)
    return params


def params_to_json(params: ControlParams) -> str:
    doc = {}
    for f in dataclasses.fields(ControlParams):
        value = getattr(params, f.name)
        if value is None:
            continue
        doc["lambda" if f.name == "lambda_" else f.name] = value
    return json.dumps(doc, indent=2, sort_keys=True)


def load_instance(path: str, fmt: str = "auto"):
    text = _read(path)
    if fmt == "auto":
        fmt = "extended" if text.lstrip().startswith("{") else "solomon"
    name = os.path.splitext(os.path.basename(path))[0].lower()
    if fmt == "solomon":
        return fio.parse_solomon(text, name=name)
    if fmt == "extended":
        return fio.parse_extended(text)
    raise FleetRouteError(f"unknown instance format {fmt!r}")


def _add_solve_flags(sub, instance_required=True):
    sub.add_argument("--instance", required=instance_required, help="instance file")
    sub.add_argument("--format", default="auto", choices=["auto", "solomon", "extended"])
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--iterations", type=int, default=None,
                     help="tabu iterations (default: control parameter)")
    sub.add_argument("--params", default=None, help="JSON control-parameter overlay")
    sub.add_argument("--objective", default="cost", choices=["cost", "routes"])
    sub.add_argument("--time-limit", type=float, default=None,
                     help="wall-clock cap in seconds for the tabu step")


def cmd_solve(args) -> int:
    instance = load_instance(args.instance, args.format)
    params = load_params(args.params)
    result = solve(instance, params, seed=args.seed, iterations=args.iterations,
                   objective=args.objective, time_limit=args.time_limit)

    if args.trace:
        lines = ["iteration,incumbent_cost,best_cost,move_kind,applied_delta"]
        kinds = {0: "none", 1: "relocate", 2: "swap"}
        for it, row in enumerate(result.trace):
            lines.append(f"{it},{row[0]!r},{row[1]!r},{kinds[int(row[2])]},{row[3]!r}")
        _write(args.trace, "\n".join(lines) + "\n")
    if args.geo_out:
        _write(args.geo_out, fio.write_solution(result.solution, result.instance,
                                                "geojson", params))
    out_format = args.out_format
    if out_format == "auto":
        out_format = "json" if (args.out or "").endswith(".json") else "text"
    _write(args.out, fio.write_solution(result.solution, result.instance,
                                        out_format, params))
    sys.stderr.write(
        f"cost {result.cost:.3f}  distance {result.total_distance:.3f}  "
        f"vehicles {result.vehicles_used}  feasible {result.feasible}  "
        f"wall {result.wall_time:.1f}s\n"
    )
    if not result.feasible:
        sys.stderr.write(result.report.summary() + "\n")
        return 2
    return 0


def cmd_validate(args) -> int:
    instance = load_instance(args.instance, args.format)
    params = load_params(args.params)
    solution = fio.load_solution(_read(args.solution), instance, params)
    report = fio.validate_solution(solution, instance, params)
    print(report.summary())
    return 0 if report.feasible else 2


def cmd_bench(args) -> int:
    params = load_params(args.params)
    bks = fio.load_bks(args.bks)
    paths = []
    for pattern in args.instances:
        hits = sorted(glob.glob(pattern))
        paths.extend(hits if hits else [pattern])

    rows = []
    for path in paths:
        name = os.path.splitext(os.path.basename(path))[0].lower()
        row = {"instance": name}
        try:
            instance = load_instance(path, args.format)
            result = solve(instance, params, seed=args.seed,
                           iterations=args.iterations, time_limit=args.time_limit)
            row.update(cost=result.cost, distance=result.total_distance,
                       vehicles=result.vehicles_used, feasible=result.feasible,
                       wall_time=result.wall_time)
            entry = bks.get(name)
            if entry is not None:
                gap = fio.compare_to_bks(result.total_distance, entry,
                                         result.vehicles_used)
                row.update(bks=entry.cost, gap_pct=gap.gap_pct,
                           bks_vehicles=entry.vehicles,
                           vehicle_delta=gap.vehicle_delta)
        except (FleetRouteError, OSError) as exc:
            row["error"] = str(exc)
        rows.append(row)

    header = f"{'instance':<12} {'cost':>10} {'gap%':>8} {'veh':>4} {'bks_veh':>7} {'feas':>5} {'time_s':>7}"
    print(header)
    for row in rows:
        if "error" in row:
            print(f"{row['instance']:<12} ERROR: {row['error']}")
            continue
        gap = f"{row['gap_pct']:.3f}" if "gap_pct" in row else "-"
        bv = str(row.get("bks_vehicles", "-"))
        print(f"{row['instance']:<12} {row['distance']:>10.2f} {gap:>8} "
              f"{row['vehicles']:>4} {bv:>7} {str(row['feasible']):>5} {row['wall_time']:>7.1f}")
    summary = {
        "instances": len(rows),
        "errors": sum("error" in r for r in rows),
        "feasible": sum(bool(r.get("feasible")) for r in rows),
        "mean_gap_pct": (
            float(np.mean([r["gap_pct"] for r in rows if "gap_pct" in r]))
            if any("gap_pct" in r for r in rows) else None
        ),
    }
    print(f"summary: {json.dumps(summary)}")
    if args.json_out:
        _write(args.json_out, json.dumps({"rows": rows, "summary": summary}, indent=2))
    return 0


def cmd_tune(args) -> int:
    records = advisor.read_history(_read(args.history))
    table = advisor.build_training_table(records)
    models = advisor.select_models(table, seed=args.seed)
    _write(args.out, advisor.save_model_store(models, table))

    print(f"training rows: {table.rows} (feasible only); "
          f"dropped constant columns: {list(table.dropped) or 'none'}")
    print(f"{'parameter':<26} {'chosen':>7} {'confidence%':>12}")
    for target in advisor.TARGET_NAMES:
        m = models[target]
        print(f"{target:<26} {m.kind:>7} {m.predictive_confidence:>12.3f}")
    importance = {}
    for target in advisor.TARGET_NAMES:
        for name, score in advisor.rank_attributes(table, target):
            importance.setdefault(name, []).append(score)
    print(f"\n{'attribute':<28} {'rank':>4} {'importance':>11}")
    ranked = sorted(importance.items(), key=lambda kv: -float(np.mean(kv[1])))
    for rank, (name, scores) in enumerate(ranked, start=1):
        print(f"{name:<28} {rank:>4} {float(np.mean(scores)):>11.3f}")
    return 0


def cmd_predict(args) -> int:
    models, table = advisor.load_model_store(_read(args.models))
    instance = load_instance(args.instance, args.format)
    features = advisor.instance_features(instance)
    params = advisor.predict_params(models, features, table, load_params(args.params))
    _write(args.out, params_to_json(params) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetroute",
        description="Heterogeneous-fleet VRPTW solver with split deliveries, "
                    "site dependencies, and data-driven parameter tuning.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve", help="solve one instance")
    _add_solve_flags(s)
    s.add_argument("--out", default=None, help="solution file (default stdout)")
    s.add_argument("--out-format", default="auto", choices=["auto", "text", "json"])
    s.add_argument("--geo-out", default=None, help="write route geometry GeoJSON")
    s.add_argument("--trace", default=None, help="write the tabu iteration trace CSV")
    s.set_defaults(func=cmd_solve)

    s = subs.add_parser("validate", help="audit a solution file against its instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--format", default="auto", choices=["auto", "solomon", "extended"])
    s.add_argument("--solution", required=True, help="solution JSON")
    s.add_argument("--params", default=None)
    s.set_defaults(func=cmd_validate)

    s = subs.add_parser("bench", help="solve a set of instances and compare to best known")
    _add_solve_flags(s, instance_required=False)
    s.add_argument("--instances", nargs="*", default=[],
                   help="instance files or globs (overrides --instance)")
    s.add_argument("--bks", default=None, help="best-known-solutions table")
    s.add_argument("--json-out", default=None, help="machine-readable results")
    s.set_defaults(func=cmd_bench)

    s = subs.add_parser("tune", help="fit parameter models from a run history")
    s.add_argument("--history", required=True, help="tuning history table")
    s.add_argument("--out", default="models.json", help="model store output")
    s.add_argument("--seed", type=int, default=13)
    s.set_defaults(func=cmd_tune)

    s = subs.add_parser("predict", help="predict control parameters for an instance")
    s.add_argument("--models", required=True, help="model store from 'tune'")
    s.add_argument("--instance", required=True)
    s.add_argument("--format", default="auto", choices=["auto", "solomon", "extended"])
    s.add_argument("--params", default=None, help="defaults to overlay onto")
    s.add_argument("--out", default=None, help="parameter overlay output (default stdout)")
    s.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "bench" and not args.instances:
        if not args.instance:
            parser.error("bench needs --instances or --instance")
        args.instances = [args.instance]
    try:
        return args.func(args)
    except FleetRouteError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
