"""Full solve pipeline.

clip windows -> plan split deliveries -> fold service times -> savings
construction -> vehicle assignment -> route elimination -> tabu search ->
intra-route improvement -> unfold -> validate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .construct import assign_vehicles, init_singleton_routes, run_savings_construction
from .costs import solution_cost
from .eliminate import eliminate_routes
from .intra import improve_solution
from .model import ControlParams, FeasibilityReport, ProblemInstance, Solution, validate_solution
from .tabu import run_tabu
from .transform import (
    apply_service_time_transform,
    clip_windows_to_depot,
    invert_service_time_transform,
    plan_split_deliveries,
)


@dataclass
class SolveResult:
    solution: Solution
    instance: ProblemInstance        # post-split instance the solution refers to
    report: FeasibilityReport
    cost: float
    total_distance: float
    vehicles_used: int
    split_plans: list
    iterations_run: int
    wall_time: float
    trace: Optional[np.ndarray] = field(repr=False, default=None)

    @property
    def feasible(self) -> bool:
        return self.report.feasible


def solve(instance: ProblemInstance,
          params: Optional[ControlParams] = None,
          seed: int = 0,
          iterations: Optional[int] = None,
          objective: str = "cost",
          time_limit: Optional[float] = None,
          max_block: int = 3,
          aspiration: bool = True,
          literal_split_fraction: bool = False) -> SolveResult:
    """Run the four-step pipeline and return the audited solution.

    ``seed`` drives the route-elimination permutations (the only stochastic
    step); identical seeds and configuration reproduce the solution exactly.
    """
    t0 = time.monotonic()
    params = (params or ControlParams()).resolved(instance.fleet).validate()
    rng = np.random.default_rng(seed)

    clipped = clip_windows_to_depot(instance)
    plans, working = plan_split_deliveries(clipped, literal_fraction=literal_split_fraction)
    pre_routes = tuple(r for plan in plans for r in plan.pre_routes)
    pre_routed_ids = {cid for plan in plans for cid in plan.trip_ids}

    transformed, record = apply_service_time_transform(working)

    singletons = init_singleton_routes(transformed, exclude_ids=pre_routed_ids)
    constructed = run_savings_construction(singletons, transformed, params)
    solution = assign_vehicles(constructed, transformed, params)
    solution = Solution(routes=solution.routes, pre_routes=pre_routes)

    solution = eliminate_routes(solution, transformed, params, rng)

    result = run_tabu(solution, transformed, params, iterations=iterations,
                      objective=objective, aspiration=aspiration,
                      time_limit=time_limit)
    solution = improve_solution(result.solution, transformed, params,
                                max_block=max_block)

    final = invert_service_time_transform(solution, record, params)
    report = validate_solution(final, working, params)
    cost = solution_cost(final, working, params)
    return SolveResult(
        solution=final,
        instance=working,
        report=report,
        cost=cost,
        total_distance=sum(r.total_distance or 0.0 for r in final.all_routes()),
        vehicles_used=len({r.vehicle for r in final.all_routes() if len(r)}),
        split_plans=plans,
        iterations_run=result.iterations_run,
        wall_time=time.monotonic() - t0,
        trace=result.trace,
    )
