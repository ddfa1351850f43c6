"""Step 3: tabu search over RELOCATE and SWAP neighbourhoods.

Each iteration applies the admissible move with the best penalized delta,
improving or not.  A relocated customer is barred from re-entering the route
it left for ``tabu_tenure`` iterations; a swap bars both entering pairs for
half that.  Tabu moves still qualify when they would beat the best solution
their (customer, route) pair has ever appeared in.  Non-improving moves pay a
frequency penalty ``lambda * count * cost * sqrt(n * k)`` per entering pair,
pushing the search into unvisited regions.  Relocations trigger a greedy
vehicle refresh (rolled back if it costs more), and small fleets get an exact
reassignment at a fixed period.

The best feasible solution seen is returned; a cheaper but infeasible one
only wins when nothing feasible was ever encountered.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels as K
from .arrays import arrays_to_routes, pack_instance, routes_to_arrays
from .model import ControlParams, ProblemInstance, Solution


@dataclass(frozen=True)
class Move:
    kind: str               # "relocate" | "swap"
    customers: tuple        # customer ids: (c,) or (c1, c2)
    source: int             # source route slot (relocate) / first slot (swap)
    dest: int               # destination route slot / second slot
    positions: tuple        # (src pos, dst pos) / (pos1, pos2)
    delta: float            # exact FULL-mode cost change
    penalized: float        # delta plus diversification when non-improving


@dataclass
class TabuState:
    """Python view of the search memory, indexed [customer, route slot]."""

    tabu_values: np.ndarray        # remaining forbidden iterations, >= 0
    inclusion_counts: np.ndarray
    best_pair_cost: np.ndarray
    iteration: int = 0
    best_cost: float = math.inf

    @classmethod
    def fresh(cls, n_customers: int, n_routes: int) -> "TabuState":
        return cls(
            tabu_values=np.zeros((n_customers + 1, n_routes), dtype=np.int64),
            inclusion_counts=np.zeros((n_customers + 1, n_routes), dtype=np.int64),
            best_pair_cost=np.full((n_customers + 1, n_routes), np.inf),
        )


class TabuWorkspace:
    """All array state for one tabu solve; kernels mutate it in place."""

    def __init__(self, solution: Solution, instance: ProblemInstance,
                 params: ControlParams, iterations: int,
                 objective: str = "cost", aspiration: bool = True,
                 vehicle_reassign: bool = True):
        self.params = params.resolved(instance.fleet)
        self.instance = instance
        self.packed = pack_instance(instance, self.params)
        self.pre_routes = solution.pre_routes
        packed = self.packed

        routes = list(solution.routes)
        self.max_r = max(len(routes), 1)
        width = packed.n + 2
        self.routes, self.rlen, self.rveh = routes_to_arrays(routes, packed,
                                                             max_r=self.max_r,
                                                             width=width)
        self.rmeta = np.zeros((self.max_r, K.RM_SIZE))
        self.ss = np.zeros((self.max_r, width))
        self.se = np.zeros((self.max_r, width))
        self.cumd = np.zeros((self.max_r, width))
        self.sufw = np.zeros((self.max_r, width + 1))
        self.sufdel = np.zeros((self.max_r, width + 1))
        self.sufslack = np.zeros((self.max_r, width + 1))
        self.texp = np.full((packed.n + 1, self.max_r), -1, dtype=np.int64)
        self.incl = np.zeros((packed.n + 1, self.max_r), dtype=np.int64)
        self.bpc = np.full((packed.n + 1, self.max_r), np.inf)
        self.best_routes = np.zeros((2, self.max_r, width), dtype=np.int64)
        self.best_rlen = np.zeros((2, self.max_r), dtype=np.int64)
        self.best_rveh = np.zeros((2, self.max_r), dtype=np.int64)
        self.best_meta = np.zeros((2, 4))
        self.trace = np.zeros((max(iterations, 1), 4))
        self.mlog_i = np.zeros((max(iterations, 1), 7), dtype=np.int64)
        self.mlog_f = np.zeros((max(iterations, 1), 2))
        self.iterations = iterations
        self.iteration = 0
        self.obj_mode = 1 if objective == "routes" else 0
        self.asp_mode = 1 if aspiration else 0
        self.greedy_mode = 1 if vehicle_reassign else 0
        self.n_cust = int(self.rlen.sum())

        for r in range(self.max_r):
            self._rebuild(r)
        total, k_act, feas = K._solution_state(self.routes, self.rlen, self.rmeta)
        for r in range(self.max_r):
            for k in range(int(self.rlen[r])):
                node = int(self.routes[r, k])
                self.incl[node, r] = 1
                self.bpc[node, r] = total
        if feas == 1:
            K._maybe_snapshot(0, total, k_act, self.routes, self.rlen, self.rveh,
                              self.best_routes, self.best_rlen, self.best_rveh,
                              self.best_meta, self.obj_mode)
        K._maybe_snapshot(1, total, k_act, self.routes, self.rlen, self.rveh,
                          self.best_routes, self.best_rlen, self.best_rveh,
                          self.best_meta, self.obj_mode)

    def _rebuild(self, slot: int):
        p = self.packed
        K.tabu_rebuild(slot, self.routes, self.rlen, self.rveh, self.rmeta,
                       self.ss, self.se, self.cumd, self.sufw, self.sufdel,
                       self.sufslack, p.dist, p.time, p.node, p.adm, p.veh,
                       p.depot_open, p.cp, p.nveh)

    def solution_state(self):
        return K._solution_state(self.routes, self.rlen, self.rmeta)

    def run_chunk(self, upto: int) -> int:
        p = self.packed
        prm = self.params
        stop = K.tabu_chunk(self.routes, self.rlen, self.rveh, self.rmeta,
                            self.ss, self.se, self.cumd, self.sufw, self.sufdel,
                            self.sufslack, self.texp, self.incl, self.bpc,
                            self.best_routes, self.best_rlen, self.best_rveh,
                            self.best_meta, self.trace, self.mlog_i, self.mlog_f,
                            p.dist, p.time, p.node, p.adm, p.veh, p.depot_open,
                            p.cp, p.nveh, prm.tabu_tenure, self.iteration, upto,
                            prm.reassign_period if self.greedy_mode else 0,
                            prm.brute_force_fleet_limit,
                            self.obj_mode, self.asp_mode, self.n_cust,
                            self.greedy_mode)
        ran_all = stop == upto
        self.iteration = int(stop)
        return ran_all

    def state_view(self) -> TabuState:
        remaining = np.maximum(0, self.texp - self.iteration + 1)
        best = self.best_meta[0, 0] if self.best_meta[0, 2] > 0.5 else self.best_meta[1, 0]
        return TabuState(tabu_values=remaining, inclusion_counts=self.incl.copy(),
                         best_pair_cost=self.bpc.copy(), iteration=self.iteration,
                         best_cost=float(best))

    def best_solution(self) -> Solution:
        which = 0 if self.best_meta[0, 2] > 0.5 else 1
        routes = arrays_to_routes(self.best_routes[which], self.best_rlen[which],
                                  self.best_rveh[which], self.packed,
                                  self.instance, self.params)
        return Solution(routes=tuple(routes), pre_routes=self.pre_routes)


def _scan(solution, state, instance, params, which: str,
          aspiration: bool = True) -> Optional[Move]:
    params = (params or ControlParams()).resolved(instance.fleet)
    ws = TabuWorkspace(solution, instance, params, iterations=1,
                       aspiration=aspiration)
    if state is not None:
        it = state.iteration
        ws.texp[:, :] = np.where(state.tabu_values > 0,
                                 it + state.tabu_values - 1, -1)
        ws.incl[:, :] = state.inclusion_counts
        ws.bpc[:, :] = state.best_pair_cost
        ws.iteration = it
    total, k_act, _ = ws.solution_state()
    sqrtnk = math.sqrt(ws.n_cust * k_act) if k_act else 0.0
    move_i = np.zeros(8, dtype=np.int64)
    move_f = np.zeros(2)
    p = ws.packed
    scan = K.relocate_scan if which == "relocate" else K.swap_scan
    found = scan(ws.routes, ws.rlen, ws.rveh, ws.rmeta, ws.ss, ws.se, ws.cumd,
                 ws.sufw, ws.sufdel, ws.sufslack, ws.texp, ws.incl, ws.bpc,
                 ws.iteration, total, sqrtnk, ws.asp_mode, p.dist, p.time,
                 p.node, p.adm, p.veh, p.cp, move_i, move_f)
    if not found:
        return None
    if which == "relocate":
        cid = p.ids[int(move_i[0]) - 1]
        return Move(kind="relocate", customers=(cid,), source=int(move_i[1]),
                    dest=int(move_i[3]), positions=(int(move_i[2]), int(move_i[4])),
                    delta=float(move_f[0]), penalized=float(move_f[1]))
    c1 = p.ids[int(move_i[0]) - 1]
    c2 = p.ids[int(move_i[3]) - 1]
    return Move(kind="swap", customers=(c1, c2), source=int(move_i[1]),
                dest=int(move_i[4]), positions=(int(move_i[2]), int(move_i[5])),
                delta=float(move_f[0]), penalized=float(move_f[1]))


def best_relocate(solution: Solution, state: Optional[TabuState],
                  instance: ProblemInstance,
                  params: Optional[ControlParams] = None,
                  aspiration: bool = True) -> Optional[Move]:
    """Best admissible relocation of one customer into another route."""
    return _scan(solution, state, instance, params, "relocate", aspiration)


def best_swap(solution: Solution, state: Optional[TabuState],
              instance: ProblemInstance,
              params: Optional[ControlParams] = None,
              aspiration: bool = True) -> Optional[Move]:
    """Best admissible exchange of two customers between routes."""
    return _scan(solution, state, instance, params, "swap", aspiration)


def diversification_penalty(move: Move, state: TabuState, solution_cost: float,
                            params: ControlParams,
                            n_customers: Optional[int] = None,
                            n_routes: Optional[int] = None,
                            customer_index=None) -> float:
    """Frequency penalty added to a non-improving move's delta."""
    if move.delta <= 0.0 or params.lambda_ == 0.0:
        return 0.0
    n = n_customers if n_customers is not None else state.tabu_values.shape[0] - 1
    k = n_routes if n_routes is not None else state.tabu_values.shape[1]
    scale = params.lambda_ * solution_cost * math.sqrt(n * k)
    index = customer_index or (lambda cid: cid)
    if move.kind == "relocate":
        c = index(move.customers[0])
        return scale * float(state.inclusion_counts[c, move.dest])
    c1 = index(move.customers[0])
    c2 = index(move.customers[1])
    return scale * float(state.inclusion_counts[c1, move.dest]
                         + state.inclusion_counts[c2, move.source])


def greedy_reassign_vehicles(solution: Solution, instance: ProblemInstance,
                             params: Optional[ControlParams] = None) -> Solution:
    """Longest-route-first cheapest-vehicle refresh; kept only if no worse."""
    params = (params or ControlParams()).resolved(instance.fleet)
    ws = TabuWorkspace(solution, instance, params, iterations=1)
    p = ws.packed
    K.greedy_reassign_inplace(ws.routes, ws.rlen, ws.rveh, ws.rmeta, ws.ss, ws.se,
                              ws.cumd, ws.sufw, ws.sufdel, ws.sufslack, p.dist,
                              p.time, p.node, p.adm, p.veh, p.depot_open, p.cp,
                              p.nveh)
    routes = arrays_to_routes(ws.routes, ws.rlen, ws.rveh, p, instance, params)
    return Solution(routes=tuple(routes), pre_routes=solution.pre_routes)


@dataclass
class TabuResult:
    solution: Solution
    best_cost: float
    best_feasible: bool
    iterations_run: int
    stopped_early: bool
    trace: np.ndarray = field(repr=False, default=None)
    move_log: tuple = field(repr=False, default=None)
    workspace: TabuWorkspace = field(repr=False, default=None)


def run_tabu(solution: Solution, instance: ProblemInstance,
             params: Optional[ControlParams] = None,
             iterations: Optional[int] = None,
             objective: str = "cost",
             aspiration: bool = True,
             time_limit: Optional[float] = None,
             chunk_size: int = 1000,
             vehicle_reassign: bool = True) -> TabuResult:
    """Run the tabu search and return the best solution found.

    ``iterations`` defaults to the control parameter; a wall-clock
    ``time_limit`` (seconds) stops between chunks with the best so far.
    """
    params = (params or ControlParams()).resolved(instance.fleet)
    iterations = params.number_of_iterations if iterations is None else iterations
    if iterations <= 0 or not solution.routes:
        return TabuResult(solution=solution, best_cost=math.nan,
                          best_feasible=False, iterations_run=0,
                          stopped_early=False)

    ws = TabuWorkspace(solution, instance, params, iterations,
                       objective=objective, aspiration=aspiration,
                       vehicle_reassign=vehicle_reassign)
    start = time.monotonic()
    stopped_early = False
    while ws.iteration < iterations:
        upto = min(iterations, ws.iteration + chunk_size)
        ran_all = ws.run_chunk(upto)
        if not ran_all:
            stopped_early = True
            break
        if time_limit is not None and time.monotonic() - start >= time_limit:
            stopped_early = True
            break

    ran = ws.iteration
    which = 0 if ws.best_meta[0, 2] > 0.5 else 1
    return TabuResult(
        solution=ws.best_solution(),
        best_cost=float(ws.best_meta[which, 0]),
        best_feasible=which == 0,
        iterations_run=ran,
        stopped_early=stopped_early,
        trace=ws.trace[:ran].copy(),
        move_log=(ws.mlog_i[:ran].copy(), ws.mlog_f[:ran].copy()),
        workspace=ws,
    )
