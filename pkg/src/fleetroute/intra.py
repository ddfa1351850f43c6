"""Step 4: re-sequencing within single routes.

Blocks of one, two, or three consecutive customers are relocated (and, for
blocks of two or three, also reversed) anywhere in the same route whenever
that strictly lowers the route's full cost.  Useful after tabu search, which
moves customers between routes but rarely leaves each route's internal order
optimal, particularly under the load-distance cost term.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import kernels as K
from .arrays import pack_instance, routes_to_arrays
from .model import ControlParams, ProblemInstance, Route, Solution, schedule_route
from .errors import ContractError


def improve_route(route: Route, instance: ProblemInstance,
                  params: Optional[ControlParams] = None,
                  max_block: int = 3, use_reversed: bool = True) -> Route:
    if route.vehicle is None:
        raise ContractError("improve_route: route has no vehicle assigned")
    if max_block not in (1, 2, 3):
        raise ContractError("improve_route: max_block must be 1, 2 or 3")
    params = (params or ControlParams()).resolved(instance.fleet)
    if len(route.customers) <= 1:
        return schedule_route(route, instance, params)
    packed = pack_instance(instance, params)
    arr, rlen, rveh = routes_to_arrays([route], packed)
    seq = arr[0, : int(rlen[0])]
    K.intra_improve(seq, int(rlen[0]), int(rveh[0]), packed.dist, packed.time,
                    packed.node, packed.adm, packed.veh, packed.depot_open,
                    packed.cp, max_block, 1 if use_reversed else 0)
    new = Route(customers=tuple(packed.ids[int(i) - 1] for i in seq),
                vehicle=route.vehicle)
    return schedule_route(new, instance, params)


def improve_solution(solution: Solution, instance: ProblemInstance,
                     params: Optional[ControlParams] = None,
                     max_block: int = 3, use_reversed: bool = True) -> Solution:
    """Apply the intra-route pass to every route of the solution."""
    improved = tuple(
        improve_route(r, instance, params, max_block, use_reversed)
        for r in solution.routes
    )
    return Solution(routes=improved, pre_routes=solution.pre_routes)
