"""Heterogeneous-fleet VRPTW solver with split deliveries, site-dependent
vehicle restrictions, a penalty cost model, and data-driven parameter tuning.
"""

from .costs import CostComponents, CostMode, route_cost_components, solution_cost
from .errors import (
    ContractError,
    FitError,
    FleetRouteError,
    InfeasibleCustomerError,
    InstanceError,
    ParseError,
    PartitionError,
    TrainingError,
)
from .model import (
    FICTITIOUS,
    ControlParams,
    Customer,
    Depot,
    FeasibilityReport,
    ProblemInstance,
    Route,
    Solution,
    TimeMatrix,
    Vehicle,
    build_time_matrix,
    schedule_route,
    validate_solution,
)
from .solver import SolveResult, solve

__version__ = "0.1.0"

__all__ = [
    "FICTITIOUS",
    "ControlParams",
    "CostComponents",
    "CostMode",
    "Customer",
    "Depot",
    "FeasibilityReport",
    "ProblemInstance",
    "Route",
    "Solution",
    "SolveResult",
    "TimeMatrix",
    "Vehicle",
    "build_time_matrix",
    "route_cost_components",
    "schedule_route",
    "solution_cost",
    "solve",
    "validate_solution",
    "FleetRouteError",
    "InstanceError",
    "PartitionError",
    "InfeasibleCustomerError",
    "ContractError",
    "ParseError",
    "TrainingError",
    "FitError",
]
