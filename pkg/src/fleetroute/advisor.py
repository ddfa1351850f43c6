"""Data-driven tuning of the solver's control parameters.

Historical runs are recorded as nine instance attributes plus the seven
control parameters used and a flag saying whether the run met every
constraint.  Only fully feasible runs are trained on.  For each target
parameter two regressors are fitted (ordinary ridge-damped least squares and
Gaussian kernel ridge), compared on a fixed holdout by predictive confidence
(percent RMSE improvement over predicting the training mean), and the winner
predicts that parameter for new instances.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import FitError, TrainingError
from .model import ControlParams, ProblemInstance

INPUT_NAMES = (
    "NUMBER_VEHICLE_TYPES",
    "NUMBER_AVAILABLE_VEHICLES",
    "SUM_TIME_WINDOWS_TOTAL",
    "NUMBER_OF_ARTICLES_TOTAL",
    "NUMBER_OF_CUSTOMERS_TOTAL",
    "WEIGHT_TOTAL",
    "NUMBER_OF_DIFFERENT_CITIES",
    "VOLUME_TOTAL",
    "NUM_CONST_CUST_VEH_TOTAL",
)
FEASIBLE_NAME = "ALL_CONSTRAINTS_MET"
TARGET_NAMES = (
    "ToleranceWeight",
    "ToleranceVolume",
    "PenaltyDelay",
    "PenaltyCustomersVehicles",
    "CostIncreasing",
    "PenaltyPercentageVolume",
    "PenaltyPercentageWeight",
)
#: target column -> ControlParams field
TARGET_FIELDS = {
    "ToleranceWeight": "tolerance_weight",
    "ToleranceVolume": "tolerance_volume",
    "PenaltyDelay": "penalty_delay",
    "PenaltyCustomersVehicles": "penalty_customers_vehicles",
    "CostIncreasing": "cost_increasing",
    "PenaltyPercentageVolume": "penalty_percentage_volume",
    "PenaltyPercentageWeight": "penalty_percentage_weight",
}


@dataclass(frozen=True)
class TuningRecord:
    inputs: dict            # INPUT_NAMES -> value
    feasible: int           # 1 when every constraint was met
    targets: dict           # TARGET_NAMES -> value

    def __post_init__(self):
        if self.feasible not in (0, 1):
            raise TrainingError(f"feasible flag must be 0 or 1, got {self.feasible}")


@dataclass
class TrainingTable:
    X: np.ndarray               # rows x kept inputs, normalized to [0,1], 1 decimal
    targets: dict               # target name -> (rows,) array
    input_names: tuple          # kept input columns
    dropped: tuple              # constant columns removed as redundant
    mins: dict                  # original-scale min per kept input
    maxs: dict

    @property
    def rows(self) -> int:
        return self.X.shape[0]


def _round1(x: np.ndarray) -> np.ndarray:
    # plain half-up rounding to one decimal (inputs are normalized, >= 0)
    return np.floor(x * 10.0 + 0.5) / 10.0


def build_training_table(records) -> TrainingTable:
    kept_records = [r for r in records if r.feasible == 1]
    if not kept_records:
        raise TrainingError("no feasible runs in the history; nothing to train on")
    raw = np.array([[float(r.inputs[name]) for name in INPUT_NAMES] for r in kept_records])
    cols = []
    names = []
    dropped = []
    mins = {}
    maxs = {}
    for j, name in enumerate(INPUT_NAMES):
        lo = raw[:, j].min()
        hi = raw[:, j].max()
        if hi - lo <= 0.0:
            dropped.append(name)
            continue
        cols.append(_round1((raw[:, j] - lo) / (hi - lo)))
        names.append(name)
        mins[name] = float(lo)
        maxs[name] = float(hi)
    if not names:
        raise TrainingError("every input column is constant")
    targets = {
        t: np.array([float(r.targets[t]) for r in kept_records]) for t in TARGET_NAMES
    }
    return TrainingTable(X=np.column_stack(cols), targets=targets,
                         input_names=tuple(names), dropped=tuple(dropped),
                         mins=mins, maxs=maxs)


def rank_attributes(table: TrainingTable, target: str):
    """Per-input importance: single-variable regression R^2 against the target.

    Deterministic, in [0, 1], descending; ties keep column order.
    """
    if table.rows < 10:
        raise TrainingError(f"need >= 10 rows to rank attributes, have {table.rows}")
    y = table.targets[target]
    vy = y.var()
    scores = []
    for j, name in enumerate(table.input_names):
        x = table.X[:, j]
        vx = x.var()
        if vx <= 0.0 or vy <= 0.0:
            scores.append((name, 0.0))
            continue
        r = float(np.cov(x, y, bias=True)[0, 1] / math.sqrt(vx * vy))
        scores.append((name, min(1.0, max(0.0, r * r))))
    return sorted(scores, key=lambda s: -s[1])


@dataclass
class FittedModel:
    kind: str                    # "LINEAR" | "KERNEL"
    target: str
    predictive_confidence: float
    train_mean: float
    train_max: float
    input_names: tuple
    coefficients: Optional[np.ndarray] = None     # LINEAR: (inputs + 1,), last = intercept
    support: Optional[np.ndarray] = field(default=None, repr=False)  # KERNEL
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    bandwidth: Optional[float] = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.kind == "LINEAR":
            return X @ self.coefficients[:-1] + self.coefficients[-1]
        d2 = ((X[:, None, :] - self.support[None, :, :]) ** 2).sum(axis=2)
        K = np.exp(-d2 / (2.0 * self.bandwidth ** 2))
        return K @ self.weights


def fit_linear(table: TrainingTable, target: str,
               rows: Optional[np.ndarray] = None) -> FittedModel:
    """Least squares with a light ridge damping (1e-6) for conditioning."""
    X = table.X if rows is None else table.X[rows]
    y = table.targets[target] if rows is None else table.targets[target][rows]
    n, p = X.shape
    if n < p + 1:
        raise FitError(f"{target}: need at least {p + 1} rows for a linear fit, have {n}")
    A = np.hstack([X, np.ones((n, 1))])
    gram = A.T @ A + 1e-6 * np.eye(p + 1)
    try:
        beta = np.linalg.solve(gram, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"{target}: degenerate design ({exc})") from None
    if not np.all(np.isfinite(beta)):
        raise FitError(f"{target}: non-finite coefficients")
    return FittedModel(kind="LINEAR", target=target, predictive_confidence=0.0,
                       train_mean=float(y.mean()), train_max=float(y.max()),
                       input_names=table.input_names, coefficients=beta)


def fit_kernel(table: TrainingTable, target: str,
               rows: Optional[np.ndarray] = None) -> FittedModel:
    """Gaussian kernel ridge: bandwidth = median pairwise distance, ridge 1e-3."""
    X = table.X if rows is None else table.X[rows]
    y = table.targets[target] if rows is None else table.targets[target][rows]
    n = X.shape[0]
    if n < 10:
        raise FitError(f"{target}: need at least 10 rows for a kernel fit, have {n}")
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    pair = np.sqrt(d2[np.triu_indices(n, k=1)])
    pair = pair[pair > 0.0]
    if pair.size == 0:
        raise FitError(f"{target}: all training inputs identical")
    bandwidth = float(np.median(pair))
    K = np.exp(-d2 / (2.0 * bandwidth ** 2))
    try:
        weights = np.linalg.solve(K + 1e-3 * np.eye(n), y)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"{target}: kernel system singular ({exc})") from None
    return FittedModel(kind="KERNEL", target=target, predictive_confidence=0.0,
                       train_mean=float(y.mean()), train_max=float(y.max()),
                       input_names=table.input_names, support=X.copy(),
                       weights=weights, bandwidth=bandwidth)


def predictive_confidence(model: FittedModel, X_hold: np.ndarray,
                          y_hold: np.ndarray) -> float:
    """Percent RMSE improvement over predicting the training mean (0..100)."""
    if len(y_hold) == 0:
        raise TrainingError("empty holdout")
    pred = model.predict(X_hold)
    rmse = float(np.sqrt(np.mean((pred - y_hold) ** 2)))
    base = float(np.sqrt(np.mean((model.train_mean - y_hold) ** 2)))
    if base == 0.0:
        return 100.0 if rmse == 0.0 else 0.0
    return max(0.0, 1.0 - rmse / base) * 100.0


def select_models(table: TrainingTable, seed: int = 13) -> dict:
    """Per target: fit both kinds on a fixed 80/20 split, keep the more
    confident (ties favour the linear model).  Returns target -> FittedModel."""
    n = table.rows
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    cut = max(1, int(round(n * 0.8)))
    if cut >= n:
        cut = n - 1
    train_rows = np.sort(perm[:cut])
    hold_rows = np.sort(perm[cut:])

    chosen = {}
    failures = []
    for target in TARGET_NAMES:
        y_hold = table.targets[target][hold_rows]
        X_hold = table.X[hold_rows]
        candidates = []
        for fitter in (fit_linear, fit_kernel):
            try:
                model = fitter(table, target, rows=train_rows)
            except FitError:
                continue
            model.predictive_confidence = predictive_confidence(model, X_hold, y_hold)
            candidates.append(model)
        if not candidates:
            failures.append(target)
            continue
        # strict > keeps LINEAR (fitted first) on ties
        best = candidates[0]
        for model in candidates[1:]:
            if model.predictive_confidence > best.predictive_confidence:
                best = model
        chosen[target] = best
    if failures:
        raise FitError(f"no model could be fitted for: {', '.join(failures)}")
    return chosen


def predict_params(models: dict, features: dict, table: TrainingTable,
                   defaults: Optional[ControlParams] = None) -> ControlParams:
    """Overlay model predictions for the seven tuned parameters on defaults.

    Features are normalized (and rounded) with the training bounds;
    predictions are clamped to [0, 1.5 x training max].  Features far outside
    the training range trigger a warning, not an error.
    """
    defaults = defaults or ControlParams()
    if not models:
        return defaults
    x = []
    for name in table.input_names:
        span = table.maxs[name] - table.mins[name]
        z = (float(features[name]) - table.mins[name]) / span
        if z < -0.5 or z > 1.5:
            warnings.warn(
                f"feature {name}={features[name]} is far outside the training range "
                f"[{table.mins[name]}, {table.maxs[name]}]; extrapolating",
                stacklevel=2,
            )
        x.append(z)
    x = _round1(np.array(x))

    overrides = {}
    for target, model in models.items():
        value = float(model.predict(x[None, :])[0])
        value = min(max(value, 0.0), max(0.0, 1.5 * model.train_max))
        overrides[TARGET_FIELDS[target]] = value
    return replace(defaults, **overrides)


# ---------------------------------------------------------------------------
# instance features, history table text form, model store
# ---------------------------------------------------------------------------

def instance_features(instance: ProblemInstance) -> dict:
    """The nine tuning attributes of one instance."""
    cities = [c.city for c in instance.customers]
    if cities and all(c is not None for c in cities):
        n_cities = len(set(cities))
    else:
        n_cities = _grid_city_count(instance)
    sdvrp_total = sum(
        len(instance.fleet) - len(c.admissible_vehicles)
        for c in instance.customers if c.admissible_vehicles is not None
    )
    return {
        "NUMBER_VEHICLE_TYPES": len({
            (v.max_weight, v.max_volume, v.variable_cost, v.fixed_cost)
            for v in instance.fleet
        }),
        "NUMBER_AVAILABLE_VEHICLES": len(instance.fleet),
        "SUM_TIME_WINDOWS_TOTAL": sum(c.window_end - c.window_start for c in instance.customers),
        "NUMBER_OF_ARTICLES_TOTAL": sum(c.articles for c in instance.customers),
        "NUMBER_OF_CUSTOMERS_TOTAL": instance.n,
        "WEIGHT_TOTAL": sum(c.demand_weight for c in instance.customers),
        "NUMBER_OF_DIFFERENT_CITIES": n_cities,
        "VOLUME_TOTAL": sum(c.demand_volume for c in instance.customers),
        "NUM_CONST_CUST_VEH_TOTAL": sdvrp_total,
    }


def _grid_city_count(instance: ProblemInstance) -> int:
    """Bucket coordinates on a 10x10 grid over their span; distinct non-empty
    cells approximate the city count when no city labels exist."""
    if instance.n == 0:
        return 0
    xs = np.array([c.x for c in instance.customers])
    ys = np.array([c.y for c in instance.customers])
    span_x = max(xs.max() - xs.min(), 1e-9)
    span_y = max(ys.max() - ys.min(), 1e-9)
    gx = np.minimum(((xs - xs.min()) / span_x * 10).astype(int), 9)
    gy = np.minimum(((ys - ys.min()) / span_y * 10).astype(int), 9)
    return len(set(zip(gx.tolist(), gy.tolist())))


def read_history(text: str):
    """Parse the delimited tuning-history table (header + one row per run)."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise TrainingError("empty history file")
    sep = "," if "," in lines[0] else None
    header = [h.strip() for h in lines[0].split(sep)]
    required = set(INPUT_NAMES) | {FEASIBLE_NAME} | set(TARGET_NAMES)
    missing = required - set(header)
    if missing:
        raise TrainingError(f"history table missing columns: {sorted(missing)}")
    idx = {name: header.index(name) for name in required}
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = [f.strip() for f in line.split(sep)]
        if len(fields) != len(header):
            raise TrainingError(f"row {lineno}: expected {len(header)} fields, got {len(fields)}")
        records.append(TuningRecord(
            inputs={name: float(fields[idx[name]]) for name in INPUT_NAMES},
            feasible=int(float(fields[idx[FEASIBLE_NAME]])),
            targets={name: float(fields[idx[name]]) for name in TARGET_NAMES},
        ))
    return records


def write_history(records) -> str:
    header = list(INPUT_NAMES) + [FEASIBLE_NAME] + list(TARGET_NAMES)
    lines = [",".join(header)]
    for r in records:
        row = [repr(float(r.inputs[n])) for n in INPUT_NAMES]
        row.append(str(r.feasible))
        row.extend(repr(float(r.targets[t])) for t in TARGET_NAMES)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def save_model_store(models: dict, table: TrainingTable) -> str:
    doc = {
        "format_version": 1,
        "input_names": list(table.input_names),
        "dropped": list(table.dropped),
        "mins": table.mins,
        "maxs": table.maxs,
        "models": {},
    }
    for target, m in models.items():
        entry = {
            "kind": m.kind,
            "predictive_confidence": m.predictive_confidence,
            "train_mean": m.train_mean,
            "train_max": m.train_max,
        }
        if m.kind == "LINEAR":
            entry["coefficients"] = m.coefficients.tolist()
        else:
            entry["support"] = m.support.tolist()
            entry["weights"] = m.weights.tolist()
            entry["bandwidth"] = m.bandwidth
        doc["models"][target] = entry
    return json.dumps(doc, indent=2, sort_keys=True)


def load_model_store(text: str):
    """Returns (models dict, skeleton TrainingTable with bounds only)."""
    doc = json.loads(text)
    names = tuple(doc["input_names"])
    table = TrainingTable(X=np.zeros((0, len(names))),
                          targets={}, input_names=names,
                          dropped=tuple(doc.get("dropped", ())),
                          mins=doc["mins"], maxs=doc["maxs"])
    models = {}
    for target, e in doc["models"].items():
        if e["kind"] == "LINEAR":
            models[target] = FittedModel(
                kind="LINEAR", target=target,
                predictive_confidence=e["predictive_confidence"],
                train_mean=e["train_mean"], train_max=e["train_max"],
                input_names=names, coefficients=np.array(e["coefficients"]),
            )
        else:
            models[target] = FittedModel(
                kind="KERNEL", target=target,
                predictive_confidence=e["predictive_confidence"],
                train_mean=e["train_mean"], train_max=e["train_max"],
                input_names=names, support=np.array(e["support"]),
                weights=np.array(e["weights"]), bandwidth=e["bandwidth"],
            )
    return models, table
