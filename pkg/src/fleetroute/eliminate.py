"""Step 2: route elimination.

For a fixed number of rounds, routes are visited in a fresh uniformly random
order; the first route whose customers can all be relocated elsewhere at a
net step-2 saving is dissolved.  High fictitious-vehicle costs make overflow
routes the first to go.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import kernels as K
from .arrays import arrays_to_routes, pack_instance, routes_to_arrays
from .model import ControlParams, ProblemInstance, Solution


def uniform_random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Fisher-Yates shuffle of 0..n-1; uniform over all n! orderings."""
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def eliminate_routes(solution: Solution, instance: ProblemInstance,
                     params: Optional[ControlParams] = None,
                     rng: Optional[np.random.Generator] = None,
                     cost_log: Optional[list] = None) -> Solution:
    """``cost_log``, when given, collects the step-2 solution cost after each
    accepted elimination (one entry per removed route)."""
    params = (params or ControlParams()).resolved(instance.fleet)
    rng = rng or np.random.default_rng(0)
    routes = list(solution.routes)
    if len(routes) <= 1:
        return solution

    packed = pack_instance(instance, params)
    arr, rlen, rveh = routes_to_arrays(routes, packed)
    n_routes = len(routes)

    def step2_total():
        out = np.zeros(K.RE_SIZE)
        total = 0.0
        for r in range(n_routes):
            K.route_eval(arr[r], int(rlen[r]), int(rveh[r]), packed.dist,
                         packed.time, packed.node, packed.adm, packed.veh,
                         packed.depot_open, packed.cp, K.MODE_STEP2, out)
            total += out[K.RE_TOTAL]
        return total

    for _ in range(params.elimination_iterations):
        if n_routes <= 1:
            break
        perm = uniform_random_permutation(n_routes, rng)
        removed = K.eliminate_round(arr, rlen, rveh, n_routes, perm,
                                    packed.dist, packed.time, packed.node,
                                    packed.adm, packed.veh, packed.depot_open,
                                    packed.cp)
        if removed >= 0:
            n_routes -= 1
            if cost_log is not None:
                cost_log.append(step2_total())

    kept = arrays_to_routes(arr[:n_routes], rlen[:n_routes], rveh[:n_routes],
                            packed, instance, params)
    return Solution(routes=tuple(kept), pre_routes=solution.pre_routes)
