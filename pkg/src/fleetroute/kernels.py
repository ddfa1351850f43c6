"""Numeric kernels for the four solve steps.

Everything here operates on the packed arrays from :mod:`fleetroute.arrays`
and is compiled with numba unless ``FLEETROUTE_PURE=1`` selects the
interpreted fallback (same source, same results).

Conventions:
  * node 0 is the depot, customers are 1..n;
  * ``NODE`` is a (5, n+1) matrix: window start/end, service, weight, volume;
  * ``VEH`` is a (6, nveh+1) matrix: max weight/volume, variable cost, fixed
    cost, shift start/end; column ``nreal`` is the fictitious vehicle;
  * a route slot is a row of ``routes`` with its length in ``rlen`` and its
    vehicle in ``rveh``; slot arrays are wide enough for any insertion;
  * move deltas are exact: cheap O(1) terms plus a bounded forward walk for
    delay propagation (the walk stops as soon as the old schedule is
    reproduced).  A lower bound on the delta is used to skip walks that
    cannot win, which never changes the selected move.
"""

import numpy as np

from ._jit import njit

# NODE rows
ND_A = 0
ND_B = 1
ND_S = 2
ND_W = 3
ND_V = 4

# VEH rows
VH_MW = 0
VH_MV = 1
VH_COST = 2
VH_FIXED = 3
VH_SS = 4
VH_SE = 5

# cp vector indices (mirrors fleetroute.arrays)
CP_PEN_DELAY = 0
CP_PPV = 1
CP_PPW = 2
CP_PCV = 3
CP_COST_INC = 4
CP_LAMBDA = 5
CP_TOL_W = 6
CP_TOL_V = 7
CP_BIG_W = 8
CP_BIG_V = 9
CP_SIM = 10
CP_INCLUDE_FIXED = 11

# route_eval output indices
RE_TOTAL = 0
RE_RRC = 1
RE_PD = 2
RE_PV = 3
RE_PW = 4
RE_PCV = 5
RE_PPW = 6
RE_DIST = 7
RE_LW = 8
RE_LV = 9
RE_DELAY = 10
RE_WRONG = 11
RE_RET = 12
RE_SIZE = 13

# cost modes
MODE_FULL = 0
MODE_STEP1 = 1
MODE_STEP2 = 2

# route meta cache columns
RM_DEP = 0
RM_LW = 1
RM_LV = 2
RM_DIST = 3
RM_LDIST = 4
RM_DELAY = 5
RM_WRONG = 6
RM_COST = 7
RM_FEAS = 8
RM_RET = 9
RM_SIZE = 10

EPS = 1e-9


# ---------------------------------------------------------------------------
# route evaluation
# ---------------------------------------------------------------------------

@njit(cache=True)
def route_eval(seq, m, veh, D, T, NODE, ADM, VEH, open0, cp, mode, out):
    """Schedule and price one route; fills ``out`` (RE_SIZE floats)."""
    dep = open0
    if VEH[VH_SS, veh] > dep:
        dep = VEH[VH_SS, veh]
    t = dep
    prev = 0
    cum = 0.0
    delay = 0.0
    lw = 0.0
    lv = 0.0
    wrong = 0.0
    load_dist = 0.0
    for k in range(m):
        c = seq[k]
        t += T[prev, c]
        if t < NODE[ND_A, c]:
            t = NODE[ND_A, c]
        t += NODE[ND_S, c]
        late = t - NODE[ND_B, c]
        if late > 0.0:
            delay += late
        cum += D[prev, c]
        load_dist += cum * NODE[ND_W, c]
        lw += NODE[ND_W, c]
        lv += NODE[ND_V, c]
        if ADM[c, veh] == 0:
            wrong += 1.0
        prev = c
    total_d = cum + D[prev, 0]
    ret = t + T[prev, 0]

    rrc = total_d * VEH[VH_COST, veh]
    if cp[CP_INCLUDE_FIXED] > 0.5:
        rrc += VEH[VH_FIXED, veh]
    pd = cp[CP_PEN_DELAY] * delay
    over_v = lv - VEH[VH_MV, veh]
    pv = cp[CP_PPV] * over_v / VEH[VH_MV, veh] if over_v > 0.0 else 0.0
    over_w = lw - VEH[VH_MW, veh]
    pw = cp[CP_PPW] * over_w / VEH[VH_MW, veh] if over_w > 0.0 else 0.0
    pcv = wrong * cp[CP_PCV]
    ppw = cp[CP_COST_INC] * VEH[VH_COST, veh] * load_dist / VEH[VH_MW, veh]

    if mode == MODE_STEP1:
        pd = 0.0
        pv = 0.0
        pw = 0.0
        pcv = 0.0
    elif mode == MODE_STEP2:
        pd = 0.0
        pv = 0.0
        pw = 0.0

    out[RE_RRC] = rrc
    out[RE_PD] = pd
    out[RE_PV] = pv
    out[RE_PW] = pw
    out[RE_PCV] = pcv
    out[RE_PPW] = ppw
    out[RE_TOTAL] = rrc + pd + pv + pw + pcv + ppw
    out[RE_DIST] = total_d
    out[RE_LW] = lw
    out[RE_LV] = lv
    out[RE_DELAY] = delay
    out[RE_WRONG] = wrong
    out[RE_RET] = ret
    return out[RE_TOTAL]


@njit(cache=True)
def cheapest_vehicle(lw, lv, VEH, nreal):
    """Cheapest real vehicle whose capacity fits the load; fictitious fallback."""
    best = nreal
    best_cost = VEH[VH_COST, nreal]
    found = False
    for v in range(nreal):
        if VEH[VH_MW, v] + EPS >= lw and VEH[VH_MV, v] + EPS >= lv:
            if not found or VEH[VH_COST, v] < best_cost:
                best = v
                best_cost = VEH[VH_COST, v]
                found = True
    return best


@njit(cache=True)
def step1_eval(seq, m, lw, lv, D, T, NODE, VEH, open0, cp, nreal):
    """Step-1 route cost (rrc + ppw with the cheapest fitting vehicle).

    Returns (cost, ok): ok is False when the route exceeds the biggest
    allowed capacities or incurs any delay -- both are forbidden while
    constructing.
    """
    if lw > cp[CP_BIG_W] + EPS or lv > cp[CP_BIG_V] + EPS:
        return 0.0, False
    t = open0
    prev = 0
    cum = 0.0
    load_dist = 0.0
    for k in range(m):
        c = seq[k]
        t += T[prev, c]
        if t < NODE[ND_A, c]:
            t = NODE[ND_A, c]
        t += NODE[ND_S, c]
        if t > NODE[ND_B, c] + EPS:
            return 0.0, False
        cum += D[prev, c]
        load_dist += cum * NODE[ND_W, c]
        prev = c
    total_d = cum + D[prev, 0]
    veh = cheapest_vehicle(lw, lv, VEH, nreal)
    cost = total_d * VEH[VH_COST, veh] + (
        cp[CP_COST_INC] * VEH[VH_COST, veh] * load_dist / VEH[VH_MW, veh]
    )
    return cost, True


# ---------------------------------------------------------------------------
# step 1: savings construction
# ---------------------------------------------------------------------------

@njit(cache=True)
def _build_merged(host, hlen, guest, glen, pos, inverted, scratch):
    """Insert guest (optionally reversed) after host position ``pos`` (-1 prepends)."""
    idx = 0
    for k in range(pos + 1):
        scratch[idx] = host[k]
        idx += 1
    if inverted == 1:
        for k in range(glen - 1, -1, -1):
            scratch[idx] = guest[k]
            idx += 1
    else:
        for k in range(glen):
            scratch[idx] = guest[k]
            idx += 1
    for k in range(pos + 1, hlen):
        scratch[idx] = host[k]
        idx += 1
    return idx


@njit(cache=True)
def _pair_best(i, j, routes, rlen, rw, rv, rc1, rdiff,
               D, T, NODE, VEH, open0, cp, nreal, scratch):
    """Best penalized savings over both host choices, all positions, both
    orientations.  Scan order: host block (i then j), position ascending,
    forward before inverted; strict improvement keeps the first maximum."""
    best = -1e18
    best_host = -1
    best_pos = -2
    best_inv = 0
    lw = rw[i] + rw[j]
    lv = rv[i] + rv[j]
    sim = cp[CP_SIM] * rdiff[i, j] / (rlen[i] + rlen[j])
    base = rc1[i] + rc1[j]
    for hsel in range(2):
        h = i if hsel == 0 else j
        g = j if hsel == 0 else i
        for pos in range(-1, rlen[h]):
            for inv in range(2):
                m = _build_merged(routes[h], rlen[h], routes[g], rlen[g], pos, inv, scratch)
                cost, ok = step1_eval(scratch, m, lw, lv, D, T, NODE, VEH, open0, cp, nreal)
                if not ok:
                    continue
                s = base - cost - sim
                if s > best:
                    best = s
                    best_host = h
                    best_pos = pos
                    best_inv = inv
    return best, best_host, best_pos, best_inv


@njit(cache=True)
def savings_construct(routes, rlen, n_routes, rdiff,
                      D, T, NODE, VEH, open0, cp, nreal, mlog):
    """Merge routes greedily by best penalized savings until none reach 0.01.

    Mutates ``routes``/``rlen``/``rdiff`` in place (rows stay compact) and
    returns the remaining route count.  Only pairs touching the merged route
    are re-evaluated between merges; other pair values cannot change.
    ``mlog`` (rows >= n_routes, 2 cols) records per merge the penalized
    savings and the step-1 total after the merge.
    """
    max_r = routes.shape[0]
    width = routes.shape[1]
    scratch = np.zeros(width, dtype=np.int64)

    rw = np.zeros(max_r)
    rv = np.zeros(max_r)
    rc1 = np.zeros(max_r)
    for r in range(n_routes):
        lw = 0.0
        lv = 0.0
        for k in range(rlen[r]):
            lw += NODE[ND_W, routes[r, k]]
            lv += NODE[ND_V, routes[r, k]]
        rw[r] = lw
        rv[r] = lv
        cost, ok = step1_eval(routes[r], rlen[r], lw, lv, D, T, NODE, VEH, open0, cp, nreal)
        rc1[r] = cost

    p_sav = np.full((max_r, max_r), -1e18)
    p_host = np.zeros((max_r, max_r), dtype=np.int64)
    p_pos = np.zeros((max_r, max_r), dtype=np.int64)
    p_inv = np.zeros((max_r, max_r), dtype=np.int64)
    for i in range(n_routes - 1):
        for j in range(i + 1, n_routes):
            s, h, pos, inv = _pair_best(i, j, routes, rlen, rw, rv, rc1, rdiff,
                                        D, T, NODE, VEH, open0, cp, nreal, scratch)
            p_sav[i, j] = s
            p_host[i, j] = h
            p_pos[i, j] = pos
            p_inv[i, j] = inv

    while n_routes > 1:
        best = -1e18
        bi = -1
        bj = -1
        for i in range(n_routes - 1):
            for j in range(i + 1, n_routes):
                if p_sav[i, j] > best:
                    best = p_sav[i, j]
                    bi = i
                    bj = j
        if best < 0.01:
            break

        host = p_host[bi, bj]
        guest = bj if host == bi else bi
        m = _build_merged(routes[host], rlen[host], routes[guest], rlen[guest],
                          p_pos[bi, bj], p_inv[bi, bj], scratch)
        for k in range(m):
            routes[host, k] = scratch[k]
        rlen[host] = m
        rw[host] += rw[guest]
        rv[host] += rv[guest]
        cost, ok = step1_eval(routes[host], m, rw[host], rv[host],
                              D, T, NODE, VEH, open0, cp, nreal)
        rc1[host] = cost
        for x in range(n_routes):
            if x != host and x != guest:
                d = rdiff[guest, x]
                rdiff[host, x] += d
                rdiff[x, host] += d

        # drop the guest row, shifting everything above it down one slot
        for r in range(guest, n_routes - 1):
            for k in range(rlen[r + 1]):
                routes[r, k] = routes[r + 1, k]
            rlen[r] = rlen[r + 1]
            rw[r] = rw[r + 1]
            rv[r] = rv[r + 1]
            rc1[r] = rc1[r + 1]
        n_routes -= 1
        for r in range(guest, n_routes):
            for x in range(n_routes + 1):
                rdiff[r, x] = rdiff[r + 1, x]
        for x in range(guest, n_routes):
            for r in range(n_routes):
                rdiff[r, x] = rdiff[r, x + 1]
        for i in range(n_routes - 1):
            for j in range(i + 1, n_routes):
                if i >= guest or j >= guest:
                    p_sav[i, j] = p_sav[i if i < guest else i + 1,
                                        j if j < guest else j + 1]
                    p_host[i, j] = p_host[i if i < guest else i + 1,
                                          j if j < guest else j + 1]
                    hshift = p_host[i, j]
                    if hshift > guest:
                        p_host[i, j] = hshift - 1
                    p_pos[i, j] = p_pos[i if i < guest else i + 1,
                                        j if j < guest else j + 1]
                    p_inv[i, j] = p_inv[i if i < guest else i + 1,
                                        j if j < guest else j + 1]

        total_c1 = 0.0
        for r in range(n_routes):
            total_c1 += rc1[r]
        li = 0
        while li < mlog.shape[0] and mlog[li, 0] > -0.5:
            li += 1
        if li < mlog.shape[0]:
            mlog[li, 0] = best
            mlog[li, 1] = total_c1

        host_new = host if host < guest else host - 1
        for x in range(n_routes):
            if x == host_new:
                continue
            i = x if x < host_new else host_new
            j = host_new if x < host_new else x
            s, h, pos, inv = _pair_best(i, j, routes, rlen, rw, rv, rc1, rdiff,
                                        D, T, NODE, VEH, open0, cp, nreal, scratch)
            p_sav[i, j] = s
            p_host[i, j] = h
            p_pos[i, j] = pos
            p_inv[i, j] = inv

    return n_routes

# ---------------------------------------------------------------------------
# step 2: route elimination
# ---------------------------------------------------------------------------

@njit(cache=True)
def eliminate_round(routes, rlen, rveh, n_routes, perm,
                    D, T, NODE, ADM, VEH, open0, cp):
    """One elimination pass over a route permutation.

    Scans the permutation; for the first route whose customers can all be
    relocated into cheapest feasible slots elsewhere (capacity of the target
    vehicle, zero delay) at a total step-2 cost below the route's own cost,
    commits the relocations, drops the route, and returns its index.
    Returns -1 when no route can be eliminated.
    """
    max_r = routes.shape[0]
    width = routes.shape[1]
    out = np.zeros(RE_SIZE)
    scratch = np.zeros(width, dtype=np.int64)
    w_routes = np.zeros((max_r, width), dtype=np.int64)
    w_rlen = np.zeros(max_r, dtype=np.int64)
    w_cost = np.zeros(max_r)
    w_lw = np.zeros(max_r)
    w_lv = np.zeros(max_r)
    base_cost = np.zeros(max_r)
    for r in range(n_routes):
        route_eval(routes[r], rlen[r], rveh[r], D, T, NODE, ADM, VEH,
                   open0, cp, MODE_STEP2, out)
        base_cost[r] = out[RE_TOTAL]

    for t_idx in range(len(perm)):
        target = perm[t_idx]
        for r in range(n_routes):
            for k in range(rlen[r]):
                w_routes[r, k] = routes[r, k]
            w_rlen[r] = rlen[r]
            w_cost[r] = base_cost[r]
            lw = 0.0
            lv = 0.0
            for k in range(rlen[r]):
                lw += NODE[ND_W, routes[r, k]]
                lv += NODE[ND_V, routes[r, k]]
            w_lw[r] = lw
            w_lv[r] = lv

        ok = True
        total_add = 0.0
        for k in range(rlen[target]):
            c = routes[target, k]
            best_add = 1e18
            best_r = -1
            best_p = -1
            for u in range(n_routes):
                if u == target:
                    continue
                veh = rveh[u]
                if w_lw[u] + NODE[ND_W, c] > VEH[VH_MW, veh] + EPS:
                    continue
                if w_lv[u] + NODE[ND_V, c] > VEH[VH_MV, veh] + EPS:
                    continue
                for q in range(w_rlen[u] + 1):
                    idx = 0
                    for kk in range(q):
                        scratch[idx] = w_routes[u, kk]
                        idx += 1
                    scratch[idx] = c
                    idx += 1
                    for kk in range(q, w_rlen[u]):
                        scratch[idx] = w_routes[u, kk]
                        idx += 1
                    total = route_eval(scratch, w_rlen[u] + 1, veh, D, T, NODE, ADM,
                                       VEH, open0, cp, MODE_STEP2, out)
                    if out[RE_DELAY] > EPS:
                        continue
                    add = total - w_cost[u]
                    if add < best_add:
                        best_add = add
                        best_r = u
                        best_p = q
            if best_r < 0:
                ok = False
                break
            mm = w_rlen[best_r]
            for kk in range(mm, best_p, -1):
                w_routes[best_r, kk] = w_routes[best_r, kk - 1]
            w_routes[best_r, best_p] = c
            w_rlen[best_r] = mm + 1
            w_lw[best_r] += NODE[ND_W, c]
            w_lv[best_r] += NODE[ND_V, c]
            route_eval(w_routes[best_r], mm + 1, rveh[best_r], D, T, NODE, ADM,
                       VEH, open0, cp, MODE_STEP2, out)
            w_cost[best_r] = out[RE_TOTAL]
            total_add += best_add

        if ok and (base_cost[target] - total_add > 0.0):
            for r in range(n_routes):
                for k in range(w_rlen[r]):
                    routes[r, k] = w_routes[r, k]
                rlen[r] = w_rlen[r]
            for r in range(target, n_routes - 1):
                for k in range(rlen[r + 1]):
                    routes[r, k] = routes[r + 1, k]
                rlen[r] = rlen[r + 1]
                rveh[r] = rveh[r + 1]
            rlen[n_routes - 1] = 0
            return target
    return -1


# ---------------------------------------------------------------------------
# vehicle assignment
# ---------------------------------------------------------------------------

@njit(cache=True)
def build_cost_matrix(routes, rlen, slots, nslots,
                      D, T, NODE, ADM, VEH, open0, cp, nreal, mode, screen):
    """Per (route, vehicle) cost matrix; +inf where a screened pairing fails.

    ``screen=1`` rejects capacity overruns and delays (construction-time
    rules); the fictitious column is never screened so every route stays
    assignable.
    """
    CM = np.full((nslots, nreal + 1), np.inf)
    out = np.zeros(RE_SIZE)
    for si in range(nslots):
        r = slots[si]
        for v in range(nreal + 1):
            total = route_eval(routes[r], rlen[r], v, D, T, NODE, ADM, VEH,
                               open0, cp, mode, out)
            if screen == 1 and v < nreal:
                if out[RE_LW] > VEH[VH_MW, v] + EPS or out[RE_LV] > VEH[VH_MV, v] + EPS:
                    continue
                if out[RE_DELAY] > EPS:
                    continue
            CM[si, v] = total
    return CM


@njit(cache=True)
def assign_min_cost(CM, n_routes, nreal):
    """Exact minimum-cost injective assignment of routes to vehicles.

    Depth-first enumeration over vehicle choices per route (fictitious
    repeatable), pruned by a row-minimum lower bound; the prune only cuts
    branches that provably cannot beat the incumbent, so the result equals
    plain exhaustive enumeration.
    """
    best_assign = np.full(n_routes, nreal, dtype=np.int64)
    if n_routes == 0:
        return 0.0, best_assign
    rowmin = np.zeros(n_routes)
    for r in range(n_routes):
        mn = CM[r, nreal]
        for v in range(nreal):
            if CM[r, v] < mn:
                mn = CM[r, v]
        rowmin[r] = mn
    suffix = np.zeros(n_routes + 1)
    for r in range(n_routes - 1, -1, -1):
        suffix[r] = suffix[r + 1] + rowmin[r]

    choice = np.full(n_routes, -1, dtype=np.int64)
    marked = np.zeros(n_routes, dtype=np.int64)  # this depth holds a used-bit
    partial = np.zeros(n_routes + 1)
    best_cost = np.inf
    used = 0
    d = 0
    while d >= 0:
        if marked[d] == 1:
            used &= ~(1 << choice[d])
            marked[d] = 0
        choice[d] += 1
        v = choice[d]
        if v > nreal:
            choice[d] = -1
            d -= 1
            continue
        if v < nreal and ((used >> v) & 1) == 1:
            continue
        c = CM[d, v]
        if not np.isfinite(c):
            continue
        if partial[d] + c + suffix[d + 1] >= best_cost:
            continue
        if v < nreal:
            used |= (1 << v)
            marked[d] = 1
        if d == n_routes - 1:
            best_cost = partial[d] + c
            for r in range(n_routes):
                best_assign[r] = choice[r]
            continue
        partial[d + 1] = partial[d] + c
        d += 1
    return best_cost, best_assign


@njit(cache=True)
def greedy_assign(slots, nslots, rdist, rlw, rlv, VEH, nreal, tol_w, tol_v, assign_out):
    """Longest route first, cheapest capacity-feasible vehicle, each used once."""
    order = np.zeros(nslots, dtype=np.int64)
    for i in range(nslots):
        order[i] = slots[i]
    for i in range(1, nslots):
        key = order[i]
        j = i - 1
        while j >= 0 and (rdist[order[j]] < rdist[key]
                          or (rdist[order[j]] == rdist[key] and order[j] > key)):
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = key
    used = np.zeros(nreal + 1, dtype=np.uint8)
    for oi in range(nslots):
        r = order[oi]
        best = -1
        best_cost = 0.0
        for v in range(nreal):
            if used[v] == 1:
                continue
            if VEH[VH_MW, v] + tol_w + EPS >= rlw[r] and VEH[VH_MV, v] + tol_v + EPS >= rlv[r]:
                if best < 0 or VEH[VH_COST, v] < best_cost:
                    best = v
                    best_cost = VEH[VH_COST, v]
        if best >= 0:
            assign_out[r] = best
            used[best] = 1
        else:
            assign_out[r] = nreal
    return 0

# ---------------------------------------------------------------------------
# step 3: tabu search
# ---------------------------------------------------------------------------

@njit(cache=True)
def tabu_rebuild(slot, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                 SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal):
    """Recompute the schedule, prefix/suffix caches, and FULL cost of a slot.

    ``SUFSLACK[slot, k]`` holds the smallest window slack (deadline minus
    service end) over stops k.. of the route; a forward push smaller than it
    can never create a delay, which lets move evaluation skip the rescheduling
    walk in the common delay-free case.
    """
    m = rlen[slot]
    veh = rveh[slot]
    dep = open0
    if VEH[VH_SS, veh] > dep:
        dep = VEH[VH_SS, veh]
    RMETA[slot, RM_DEP] = dep
    if m == 0:
        for col in range(RM_SIZE):
            RMETA[slot, col] = 0.0
        RMETA[slot, RM_DEP] = dep
        RMETA[slot, RM_RET] = dep
        RMETA[slot, RM_FEAS] = 1.0
        SUFW[slot, 0] = 0.0
        SUFDEL[slot, 0] = 0.0
        SUFSLACK[slot, 0] = 1e18
        return

    t = dep
    prev = 0
    cum = 0.0
    ld = 0.0
    lw = 0.0
    lv = 0.0
    wrong = 0.0
    for k in range(m):
        c = routes[slot, k]
        arr = t + T[prev, c]
        s = arr if arr > NODE[ND_A, c] else NODE[ND_A, c]
        e = s + NODE[ND_S, c]
        SS[slot, k] = s
        SE[slot, k] = e
        cum += D[prev, c]
        CUMD[slot, k] = cum
        ld += cum * NODE[ND_W, c]
        lw += NODE[ND_W, c]
        lv += NODE[ND_V, c]
        if ADM[c, veh] == 0:
            wrong += 1.0
        t = e
        prev = c
    dist = cum + D[prev, 0]
    ret = t + T[prev, 0]
    SUFW[slot, m] = 0.0
    SUFDEL[slot, m] = 0.0
    SUFSLACK[slot, m] = 1e18
    for k in range(m - 1, -1, -1):
        c = routes[slot, k]
        SUFW[slot, k] = SUFW[slot, k + 1] + NODE[ND_W, c]
        dl = SE[slot, k] - NODE[ND_B, c]
        if dl < 0.0:
            dl = 0.0
        SUFDEL[slot, k] = SUFDEL[slot, k + 1] + dl
        slack = NODE[ND_B, c] - SE[slot, k]
        SUFSLACK[slot, k] = slack if slack < SUFSLACK[slot, k + 1] else SUFSLACK[slot, k + 1]

    rrc = dist * VEH[VH_COST, veh]
    if cp[CP_INCLUDE_FIXED] > 0.5:
        rrc += VEH[VH_FIXED, veh]
    delay = SUFDEL[slot, 0]
    pd = cp[CP_PEN_DELAY] * delay
    over_v = lv - VEH[VH_MV, veh]
    pv = cp[CP_PPV] * over_v / VEH[VH_MV, veh] if over_v > 0.0 else 0.0
    over_w = lw - VEH[VH_MW, veh]
    pw = cp[CP_PPW] * over_w / VEH[VH_MW, veh] if over_w > 0.0 else 0.0
    pcv = wrong * cp[CP_PCV]
    ppw = cp[CP_COST_INC] * VEH[VH_COST, veh] * ld / VEH[VH_MW, veh]

    RMETA[slot, RM_LW] = lw
    RMETA[slot, RM_LV] = lv
    RMETA[slot, RM_DIST] = dist
    RMETA[slot, RM_LDIST] = ld
    RMETA[slot, RM_DELAY] = delay
    RMETA[slot, RM_WRONG] = wrong
    RMETA[slot, RM_COST] = rrc + pd + pv + pw + pcv + ppw
    RMETA[slot, RM_RET] = ret
    feas = 1.0
    if delay > EPS or over_v > EPS or over_w > EPS or wrong > 0.0:
        feas = 0.0
    if veh == nreal:
        feas = 0.0
    if ret > VEH[VH_SE, veh] + EPS:
        feas = 0.0
    RMETA[slot, RM_FEAS] = feas


@njit(cache=True)
def _removal_delta(a, p, routes, rlen, rveh, RMETA, SE, CUMD, SUFW,
                   SUFDEL, SUFSLACK, D, T, NODE, ADM, VEH, cp):
    """Exact FULL-mode delta of dropping the stop at position p of slot a."""
    m = rlen[a]
    veh = rveh[a]
    c = routes[a, p]
    prev = routes[a, p - 1] if p > 0 else 0
    nxt = routes[a, p + 1] if p < m - 1 else 0
    dd = D[prev, nxt] - D[prev, c] - D[c, nxt]
    vcost = VEH[VH_COST, veh]
    mw = VEH[VH_MW, veh]
    mv = VEH[VH_MV, veh]

    lw0 = RMETA[a, RM_LW]
    lv0 = RMETA[a, RM_LV]
    lw1 = lw0 - NODE[ND_W, c]
    lv1 = lv0 - NODE[ND_V, c]
    pw0 = cp[CP_PPW] * (lw0 - mw) / mw if lw0 > mw else 0.0
    pv0 = cp[CP_PPV] * (lv0 - mv) / mv if lv0 > mv else 0.0
    pw1 = cp[CP_PPW] * (lw1 - mw) / mw if lw1 > mw else 0.0
    pv1 = cp[CP_PPV] * (lv1 - mv) / mv if lv1 > mv else 0.0
    d_pcv = -cp[CP_PCV] if ADM[c, veh] == 0 else 0.0
    d_ldist = -CUMD[a, p] * NODE[ND_W, c] + dd * SUFW[a, p + 1]
    d_ppw = cp[CP_COST_INC] * vcost * d_ldist / mw

    own = SE[a, p] - NODE[ND_B, c]
    if own < 0.0:
        own = 0.0
    d_delay = -own
    t = SE[a, p - 1] if p > 0 else RMETA[a, RM_DEP]
    pr = prev
    if p + 1 < m:
        nxt_node = routes[a, p + 1]
        push = (t + T[pr, nxt_node]) - (SE[a, p] + T[c, nxt_node])
        if SUFDEL[a, p + 1] == 0.0 and (push <= 0.0 or push <= SUFSLACK[a, p + 1]):
            return (vcost * dd + cp[CP_PEN_DELAY] * d_delay
                    + (pv1 - pv0) + (pw1 - pw0) + d_pcv + d_ppw)
    for j in range(p + 1, m):
        node = routes[a, j]
        arr = t + T[pr, node]
        s = arr if arr > NODE[ND_A, node] else NODE[ND_A, node]
        e = s + NODE[ND_S, node]
        old_e = SE[a, j]
        dl_new = e - NODE[ND_B, node]
        if dl_new < 0.0:
            dl_new = 0.0
        dl_old = old_e - NODE[ND_B, node]
        if dl_old < 0.0:
            dl_old = 0.0
        d_delay += dl_new - dl_old
        if e == old_e:
            break
        t = e
        pr = node
    return (vcost * dd + cp[CP_PEN_DELAY] * d_delay
            + (pv1 - pv0) + (pw1 - pw0) + d_pcv + d_ppw)


@njit(cache=True)
def _insert_cheap(b, q, c, routes, rlen, rveh, RMETA, CUMD, SUFW,
                  D, NODE, ADM, VEH, cp):
    """Delay-free part of the FULL-mode delta of inserting c before position q."""
    m = rlen[b]
    veh = rveh[b]
    prev = routes[b, q - 1] if q > 0 else 0
    nxt = routes[b, q] if q < m else 0
    dd = D[prev, c] + D[c, nxt] - D[prev, nxt]
    vcost = VEH[VH_COST, veh]
    mw = VEH[VH_MW, veh]
    mv = VEH[VH_MV, veh]

    lw0 = RMETA[b, RM_LW]
    lv0 = RMETA[b, RM_LV]
    lw1 = lw0 + NODE[ND_W, c]
    lv1 = lv0 + NODE[ND_V, c]
    pw0 = cp[CP_PPW] * (lw0 - mw) / mw if lw0 > mw else 0.0
    pv0 = cp[CP_PPV] * (lv0 - mv) / mv if lv0 > mv else 0.0
    pw1 = cp[CP_PPW] * (lw1 - mw) / mw if lw1 > mw else 0.0
    pv1 = cp[CP_PPV] * (lv1 - mv) / mv if lv1 > mv else 0.0
    d_pcv = cp[CP_PCV] if ADM[c, veh] == 0 else 0.0
    cum_c = (CUMD[b, q - 1] if q > 0 else 0.0) + D[prev, c]
    d_ldist = cum_c * NODE[ND_W, c] + dd * SUFW[b, q]
    d_ppw = cp[CP_COST_INC] * vcost * d_ldist / mw
    return vcost * dd + (pv1 - pv0) + (pw1 - pw0) + d_pcv + d_ppw


@njit(cache=True)
def _insert_delay_delta(b, q, c, routes, rlen, RMETA, SE, SUFDEL, SUFSLACK,
                        T, NODE):
    """Exact change in total delay minutes from inserting c before position q."""
    m = rlen[b]
    prev = routes[b, q - 1] if q > 0 else 0
    t0 = SE[b, q - 1] if q > 0 else RMETA[b, RM_DEP]
    arr = t0 + T[prev, c]
    s = arr if arr > NODE[ND_A, c] else NODE[ND_A, c]
    e = s + NODE[ND_S, c]
    own = e - NODE[ND_B, c]
    if own < 0.0:
        own = 0.0
    d_delay = own
    t = e
    pr = c
    if q < m:
        nxt_node = routes[b, q]
        push = (e + T[c, nxt_node]) - (t0 + T[prev, nxt_node])
        if SUFDEL[b, q] == 0.0 and (push <= 0.0 or push <= SUFSLACK[b, q]):
            return d_delay
    for j in range(q, m):
        node = routes[b, j]
        arr = t + T[pr, node]
        s = arr if arr > NODE[ND_A, node] else NODE[ND_A, node]
        e = s + NODE[ND_S, node]
        old_e = SE[b, j]
        dl_new = e - NODE[ND_B, node]
        if dl_new < 0.0:
            dl_new = 0.0
        dl_old = old_e - NODE[ND_B, node]
        if dl_old < 0.0:
            dl_old = 0.0
        d_delay += dl_new - dl_old
        if e == old_e:
            break
        t = e
        pr = node
    return d_delay


@njit(cache=True)
def _replace_cheap(r, p, y, routes, rlen, rveh, RMETA, CUMD, SUFW,
                   D, NODE, ADM, VEH, cp):
    """Delay-free delta of substituting node y for the stop at position p."""
    m = rlen[r]
    veh = rveh[r]
    x = routes[r, p]
    prev = routes[r, p - 1] if p > 0 else 0
    nxt = routes[r, p + 1] if p < m - 1 else 0
    dd = D[prev, y] + D[y, nxt] - D[prev, x] - D[x, nxt]
    vcost = VEH[VH_COST, veh]
    mw = VEH[VH_MW, veh]
    mv = VEH[VH_MV, veh]

    lw0 = RMETA[r, RM_LW]
    lv0 = RMETA[r, RM_LV]
    lw1 = lw0 + NODE[ND_W, y] - NODE[ND_W, x]
    lv1 = lv0 + NODE[ND_V, y] - NODE[ND_V, x]
    pw0 = cp[CP_PPW] * (lw0 - mw) / mw if lw0 > mw else 0.0
    pv0 = cp[CP_PPV] * (lv0 - mv) / mv if lv0 > mv else 0.0
    pw1 = cp[CP_PPW] * (lw1 - mw) / mw if lw1 > mw else 0.0
    pv1 = cp[CP_PPV] * (lv1 - mv) / mv if lv1 > mv else 0.0
    d_pcv = 0.0
    if ADM[y, veh] == 0:
        d_pcv += cp[CP_PCV]
    if ADM[x, veh] == 0:
        d_pcv -= cp[CP_PCV]
    cum_y = (CUMD[r, p - 1] if p > 0 else 0.0) + D[prev, y]
    d_ldist = cum_y * NODE[ND_W, y] - CUMD[r, p] * NODE[ND_W, x] + dd * SUFW[r, p + 1]
    d_ppw = cp[CP_COST_INC] * vcost * d_ldist / mw
    return vcost * dd + (pv1 - pv0) + (pw1 - pw0) + d_pcv + d_ppw


@njit(cache=True)
def _replace_delay_delta(r, p, y, routes, rlen, RMETA, SE, SUFDEL, SUFSLACK,
                         T, NODE):
    m = rlen[r]
    x = routes[r, p]
    prev = routes[r, p - 1] if p > 0 else 0
    t0 = SE[r, p - 1] if p > 0 else RMETA[r, RM_DEP]
    arr = t0 + T[prev, y]
    s = arr if arr > NODE[ND_A, y] else NODE[ND_A, y]
    e = s + NODE[ND_S, y]
    own_new = e - NODE[ND_B, y]
    if own_new < 0.0:
        own_new = 0.0
    own_old = SE[r, p] - NODE[ND_B, x]
    if own_old < 0.0:
        own_old = 0.0
    d_delay = own_new - own_old
    t = e
    pr = y
    if p + 1 < m:
        nxt_node = routes[r, p + 1]
        push = (e + T[y, nxt_node]) - (SE[r, p] + T[x, nxt_node])
        if SUFDEL[r, p + 1] == 0.0 and (push <= 0.0 or push <= SUFSLACK[r, p + 1]):
            return d_delay
    for j in range(p + 1, m):
        node = routes[r, j]
        arr = t + T[pr, node]
        s = arr if arr > NODE[ND_A, node] else NODE[ND_A, node]
        e = s + NODE[ND_S, node]
        old_e = SE[r, j]
        dl_new = e - NODE[ND_B, node]
        if dl_new < 0.0:
            dl_new = 0.0
        dl_old = old_e - NODE[ND_B, node]
        if dl_old < 0.0:
            dl_old = 0.0
        d_delay += dl_new - dl_old
        if e == old_e:
            break
        t = e
        pr = node
    return d_delay


@njit(cache=True)
def relocate_scan(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                  SUFSLACK, TEXP, INCL, BPC, cur_iter, total_cost, sqrtnk,
                  asp_mode, D, T, NODE, ADM, VEH, cp, move_i, move_f):
    """Best admissible relocation by penalized delta; returns 1 when found.

    move_i = [customer, src slot, src pos, dst slot, dst pos]; move_f =
    [exact delta, penalized delta].  Scan order (src slot, src pos, dst slot,
    dst pos) with strict improvement fixes tie-breaking.
    """
    max_r = routes.shape[0]
    best_score = np.inf
    found = 0
    pen = cp[CP_PEN_DELAY]
    lam = cp[CP_LAMBDA]
    cinc = cp[CP_COST_INC]
    k_pcv = cp[CP_PCV]
    for a in range(max_r):
        ma = rlen[a]
        if ma == 0:
            continue
        for p in range(ma):
            c = routes[a, p]
            w_c = NODE[ND_W, c]
            v_c = NODE[ND_V, c]
            a_c = NODE[ND_A, c]
            s_c = NODE[ND_S, c]
            b_c = NODE[ND_B, c]
            rem = _removal_delta(a, p, routes, rlen, rveh, RMETA, SE, CUMD, SUFW,
                                 SUFDEL, SUFSLACK, D, T, NODE, ADM, VEH, cp)
            for b in range(max_r):
                mb = rlen[b]
                if b == a or mb == 0:
                    continue
                tabu = TEXP[c, b] >= cur_iter
                if tabu and asp_mode == 0:
                    continue
                thr_asp = BPC[c, b] - total_cost
                # destination-route constants for the position loop
                veh = rveh[b]
                vcost = VEH[VH_COST, veh]
                mw = VEH[VH_MW, veh]
                mv = VEH[VH_MV, veh]
                lw0 = RMETA[b, RM_LW]
                lv0 = RMETA[b, RM_LV]
                pw0 = cp[CP_PPW] * (lw0 - mw) / mw if lw0 > mw else 0.0
                pv0 = cp[CP_PPV] * (lv0 - mv) / mv if lv0 > mv else 0.0
                lw1 = lw0 + w_c
                lv1 = lv0 + v_c
                pw1 = cp[CP_PPW] * (lw1 - mw) / mw if lw1 > mw else 0.0
                pv1 = cp[CP_PPV] * (lv1 - mv) / mv if lv1 > mv else 0.0
                fixed_part = rem + (pv1 - pv0) + (pw1 - pw0)
                if ADM[c, veh] == 0:
                    fixed_part += k_pcv
                ppw_scale = cinc * vcost / mw
                div = lam * INCL[c, b] * total_cost * sqrtnk
                for q in range(mb + 1):
                    prev = routes[b, q - 1] if q > 0 else 0
                    nxt = routes[b, q] if q < mb else 0
                    leg_in = D[prev, c]
                    dd = leg_in + D[c, nxt] - D[prev, nxt]
                    cum_c = (CUMD[b, q - 1] if q > 0 else 0.0) + leg_in
                    cheap = (vcost * dd
                             + ppw_scale * (cum_c * w_c + dd * SUFW[b, q]))
                    lb = fixed_part + cheap - pen * SUFDEL[b, q]
                    if lb >= best_score:
                        continue
                    if tabu and lb >= thr_asp:
                        continue
                    # delay change: own lateness plus downstream propagation
                    t0 = SE[b, q - 1] if q > 0 else RMETA[b, RM_DEP]
                    arr = t0 + T[prev, c]
                    s = arr if arr > a_c else a_c
                    e = s + s_c
                    ddel = e - b_c
                    if ddel < 0.0:
                        ddel = 0.0
                    if q < mb:
                        push = (e + T[c, nxt]) - (t0 + T[prev, nxt])
                        if SUFDEL[b, q] != 0.0 or (push > 0.0 and push > SUFSLACK[b, q]):
                            ddel = _insert_delay_delta(b, q, c, routes, rlen, RMETA,
                                                       SE, SUFDEL, SUFSLACK, T, NODE)
                    delta = fixed_part + cheap + pen * ddel
                    if tabu and not (delta < thr_asp):
                        continue
                    score = delta
                    if delta > 0.0:
                        score += div
                    if score < best_score:
                        best_score = score
                        found = 1
                        move_i[0] = c
                        move_i[1] = a
                        move_i[2] = p
                        move_i[3] = b
                        move_i[4] = q
                        move_f[0] = delta
                        move_f[1] = score
    return found


@njit(cache=True)
def swap_scan(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
              SUFSLACK, TEXP, INCL, BPC, cur_iter, total_cost, sqrtnk,
              asp_mode, D, T, NODE, ADM, VEH, cp, move_i, move_f):
    """Best admissible cross-route exchange; forbidden only when both entering
    pairs are tabu (aspiration must then beat both pairs' best costs)."""
    max_r = routes.shape[0]
    best_score = np.inf
    found = 0
    pen = cp[CP_PEN_DELAY]
    lam = cp[CP_LAMBDA]
    cinc = cp[CP_COST_INC]
    k_pcv = cp[CP_PCV]
    for a in range(max_r):
        ma = rlen[a]
        if ma == 0:
            continue
        veh_a = rveh[a]
        vcost_a = VEH[VH_COST, veh_a]
        mw_a = VEH[VH_MW, veh_a]
        mv_a = VEH[VH_MV, veh_a]
        lw_a = RMETA[a, RM_LW]
        lv_a = RMETA[a, RM_LV]
        pw0_a = cp[CP_PPW] * (lw_a - mw_a) / mw_a if lw_a > mw_a else 0.0
        pv0_a = cp[CP_PPV] * (lv_a - mv_a) / mv_a if lv_a > mv_a else 0.0
        scale_a = cinc * vcost_a / mw_a
        for b in range(a + 1, max_r):
            mb = rlen[b]
            if mb == 0:
                continue
            veh_b = rveh[b]
            vcost_b = VEH[VH_COST, veh_b]
            mw_b = VEH[VH_MW, veh_b]
            mv_b = VEH[VH_MV, veh_b]
            lw_b = RMETA[b, RM_LW]
            lv_b = RMETA[b, RM_LV]
            pw0_b = cp[CP_PPW] * (lw_b - mw_b) / mw_b if lw_b > mw_b else 0.0
            pv0_b = cp[CP_PPV] * (lv_b - mv_b) / mv_b if lv_b > mv_b else 0.0
            scale_b = cinc * vcost_b / mw_b
            for p1 in range(ma):
                c1 = routes[a, p1]
                w1 = NODE[ND_W, c1]
                v1 = NODE[ND_V, c1]
                tabu1 = TEXP[c1, b] >= cur_iter
                prev1 = routes[a, p1 - 1] if p1 > 0 else 0
                nxt1 = routes[a, p1 + 1] if p1 < ma - 1 else 0
                legs1_out = D[prev1, c1] + D[c1, nxt1]
                cum_base1 = CUMD[a, p1 - 1] if p1 > 0 else 0.0
                ldist_out1 = CUMD[a, p1] * w1
                sufw1 = SUFW[a, p1 + 1]
                sufdel1 = SUFDEL[a, p1]
                adm1_out = ADM[c1, veh_a] == 0
                for p2 in range(mb):
                    c2 = routes[b, p2]
                    tabu2 = TEXP[c2, a] >= cur_iter
                    forbidden = tabu1 and tabu2
                    if forbidden and asp_mode == 0:
                        continue
                    w2 = NODE[ND_W, c2]
                    v2 = NODE[ND_V, c2]
                    # route a: c1 -> c2
                    dd1 = D[prev1, c2] + D[c2, nxt1] - legs1_out
                    lw1n = lw_a + w2 - w1
                    lv1n = lv_a + v2 - v1
                    pw1n = cp[CP_PPW] * (lw1n - mw_a) / mw_a if lw1n > mw_a else 0.0
                    pv1n = cp[CP_PPV] * (lv1n - mv_a) / mv_a if lv1n > mv_a else 0.0
                    cheap1 = (vcost_a * dd1 + (pv1n - pv0_a) + (pw1n - pw0_a)
                              + scale_a * ((cum_base1 + D[prev1, c2]) * w2
                                           - ldist_out1 + dd1 * sufw1))
                    if ADM[c2, veh_a] == 0:
                        cheap1 += k_pcv
                    if adm1_out:
                        cheap1 -= k_pcv
                    # route b: c2 -> c1
                    prev2 = routes[b, p2 - 1] if p2 > 0 else 0
                    nxt2 = routes[b, p2 + 1] if p2 < mb - 1 else 0
                    dd2 = D[prev2, c1] + D[c1, nxt2] - D[prev2, c2] - D[c2, nxt2]
                    lw2n = lw_b + w1 - w2
                    lv2n = lv_b + v1 - v2
                    pw2n = cp[CP_PPW] * (lw2n - mw_b) / mw_b if lw2n > mw_b else 0.0
                    pv2n = cp[CP_PPV] * (lv2n - mv_b) / mv_b if lv2n > mv_b else 0.0
                    cum2 = (CUMD[b, p2 - 1] if p2 > 0 else 0.0) + D[prev2, c1]
                    cheap2 = (vcost_b * dd2 + (pv2n - pv0_b) + (pw2n - pw0_b)
                              + scale_b * (cum2 * w1 - CUMD[b, p2] * w2
                                           + dd2 * SUFW[b, p2 + 1]))
                    if ADM[c1, veh_b] == 0:
                        cheap2 += k_pcv
                    if ADM[c2, veh_b] == 0:
                        cheap2 -= k_pcv
                    lb = cheap1 + cheap2 - pen * (sufdel1 + SUFDEL[b, p2])
                    if lb >= best_score:
                        continue
                    thr_asp = np.inf
                    if forbidden:
                        thr_asp = min(BPC[c1, b], BPC[c2, a]) - total_cost
                        if lb >= thr_asp:
                            continue
                    dd_t1 = _replace_delay_delta(a, p1, c2, routes, rlen, RMETA, SE,
                                                 SUFDEL, SUFSLACK, T, NODE)
                    dd_t2 = _replace_delay_delta(b, p2, c1, routes, rlen, RMETA, SE,
                                                 SUFDEL, SUFSLACK, T, NODE)
                    delta = cheap1 + cheap2 + pen * (dd_t1 + dd_t2)
                    if forbidden and not (delta < thr_asp):
                        continue
                    score = delta
                    if delta > 0.0:
                        score += lam * (INCL[c1, b] + INCL[c2, a]) * total_cost * sqrtnk
                    if score < best_score:
                        best_score = score
                        found = 1
                        move_i[0] = c1
                        move_i[1] = a
                        move_i[2] = p1
                        move_i[3] = c2
                        move_i[4] = b
                        move_i[5] = p2
                        move_f[0] = delta
                        move_f[1] = score
    return found

@njit(cache=True)
def greedy_reassign_inplace(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                            SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal):
    """Greedy vehicle refresh after a relocation; kept only if no worse.

    Returns 1 when the assignment was committed, 0 when rolled back.
    """
    max_r = routes.shape[0]
    slots = np.zeros(max_r, dtype=np.int64)
    ns = 0
    old_total = 0.0
    for r in range(max_r):
        if rlen[r] > 0:
            slots[ns] = r
            ns += 1
            old_total += RMETA[r, RM_COST]
    if ns == 0:
        return 0
    assign = np.full(max_r, -1, dtype=np.int64)
    greedy_assign(slots, ns, RMETA[:, RM_DIST], RMETA[:, RM_LW], RMETA[:, RM_LV],
                  VEH, nreal, cp[CP_TOL_W], cp[CP_TOL_V], assign)
    out = np.zeros(RE_SIZE)
    new_total = 0.0
    for si in range(ns):
        r = slots[si]
        v = assign[r]
        if v == rveh[r]:
            new_total += RMETA[r, RM_COST]
        else:
            route_eval(routes[r], rlen[r], v, D, T, NODE, ADM, VEH, open0, cp,
                       MODE_FULL, out)
            new_total += out[RE_TOTAL]
    if new_total > old_total + 1e-12:
        return 0
    for si in range(ns):
        r = slots[si]
        if assign[r] != rveh[r]:
            rveh[r] = assign[r]
            tabu_rebuild(r, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                         SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal)
    return 1


@njit(cache=True)
def exhaustive_reassign_inplace(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW,
                                SUFDEL, SUFSLACK, D, T, NODE, ADM, VEH, open0,
                                cp, nreal):
    """Optimal vehicle assignment over all injective choices (FULL mode)."""
    max_r = routes.shape[0]
    slots = np.zeros(max_r, dtype=np.int64)
    ns = 0
    for r in range(max_r):
        if rlen[r] > 0:
            slots[ns] = r
            ns += 1
    if ns == 0:
        return 0
    CM = build_cost_matrix(routes, rlen, slots, ns, D, T, NODE, ADM, VEH,
                           open0, cp, nreal, MODE_FULL, 0)
    _, assign = assign_min_cost(CM, ns, nreal)
    changed = 0
    for si in range(ns):
        r = slots[si]
        if assign[si] != rveh[r]:
            rveh[r] = assign[si]
            tabu_rebuild(r, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                         SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal)
            changed = 1
    return changed


@njit(cache=True)
def _solution_state(routes, rlen, RMETA):
    """(total FULL cost, active route count, all-feasible flag)."""
    max_r = routes.shape[0]
    total = 0.0
    k_act = 0
    feas = 1
    for r in range(max_r):
        if rlen[r] > 0:
            total += RMETA[r, RM_COST]
            k_act += 1
            if RMETA[r, RM_FEAS] < 0.5:
                feas = 0
    return total, k_act, feas


@njit(cache=True)
def _maybe_snapshot(which, total, k_act, routes, rlen, rveh,
                    best_routes, best_rlen, best_rveh, best_meta, obj_mode):
    """Update incumbent ``which`` (0 feasible, 1 any) when strictly better."""
    have = best_meta[which, 2] > 0.5
    better = False
    if not have:
        better = True
    elif obj_mode == 1:
        if k_act < best_meta[which, 1] or (k_act == best_meta[which, 1]
                                           and total < best_meta[which, 0]):
            better = True
    else:
        if total < best_meta[which, 0]:
            better = True
    if better:
        best_meta[which, 0] = total
        best_meta[which, 1] = k_act
        best_meta[which, 2] = 1.0
        max_r = routes.shape[0]
        for r in range(max_r):
            best_rlen[which, r] = rlen[r]
            best_rveh[which, r] = rveh[r]
            for k in range(rlen[r]):
                best_routes[which, r, k] = routes[r, k]
    return better


@njit(cache=True)
def tabu_chunk(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL, SUFSLACK,
               TEXP, INCL, BPC,
               best_routes, best_rlen, best_rveh, best_meta,
               trace, mlog_i, mlog_f,
               D, T, NODE, ADM, VEH, open0, cp, nreal,
               tenure, it0, it1, period, bf_limit, obj_mode, asp_mode, n_cust,
               greedy_mode):
    """Run tabu iterations [it0, it1); returns the first unrun iteration.

    A return value below it1 means the neighbourhood was exhausted (every
    move tabu without aspiration) and the search stopped early.
    ``greedy_mode=0`` skips the vehicle refresh after relocations (used by
    replay-style tests that track the neighbourhood in isolation).
    """
    move_i = np.zeros(8, dtype=np.int64)
    move_f = np.zeros(2)
    move_i2 = np.zeros(8, dtype=np.int64)
    move_f2 = np.zeros(2)

    for it in range(it0, it1):
        total, k_act, _ = _solution_state(routes, rlen, RMETA)
        sqrtnk = np.sqrt(n_cust * k_act) if k_act > 0 else 0.0

        f1 = relocate_scan(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                           SUFSLACK, TEXP, INCL, BPC, it, total, sqrtnk,
                           asp_mode, D, T, NODE, ADM, VEH, cp, move_i, move_f)
        f2 = swap_scan(routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                       SUFSLACK, TEXP, INCL, BPC, it, total, sqrtnk, asp_mode,
                       D, T, NODE, ADM, VEH, cp, move_i2, move_f2)

        kind = 0
        if f1 == 1 and (f2 == 0 or move_f[1] <= move_f2[1]):
            kind = 1
        elif f2 == 1:
            kind = 2
        if kind == 0:
            return it

        if kind == 1:
            c = move_i[0]
            a = move_i[1]
            p = move_i[2]
            b = move_i[3]
            q = move_i[4]
            for k in range(p, rlen[a] - 1):
                routes[a, k] = routes[a, k + 1]
            rlen[a] -= 1
            for k in range(rlen[b], q, -1):
                routes[b, k] = routes[b, k - 1]
            routes[b, q] = c
            rlen[b] += 1
            TEXP[c, a] = it + tenure
            INCL[c, b] += 1
            tabu_rebuild(a, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                         SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal)
            tabu_rebuild(b, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                         SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal)
            applied = move_f[0]
            if greedy_mode == 1:
                greedy_reassign_inplace(routes, rlen, rveh, RMETA, SS, SE, CUMD,
                                        SUFW, SUFDEL, SUFSLACK, D, T, NODE, ADM,
                                        VEH, open0, cp, nreal)
            mlog_i[it, 0] = 1
            mlog_i[it, 1] = c
            mlog_i[it, 2] = a
            mlog_i[it, 3] = p
            mlog_i[it, 4] = b
            mlog_i[it, 5] = q
        else:
            c1 = move_i2[0]
            a = move_i2[1]
            p1 = move_i2[2]
            c2 = move_i2[3]
            b = move_i2[4]
            p2 = move_i2[5]
            routes[a, p1] = c2
            routes[b, p2] = c1
            half = tenure // 2
            TEXP[c1, b] = it + half
            TEXP[c2, a] = it + half
            INCL[c1, b] += 1
            INCL[c2, a] += 1
            tabu_rebuild(a, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                         SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal)
            tabu_rebuild(b, routes, rlen, rveh, RMETA, SS, SE, CUMD, SUFW, SUFDEL,
                         SUFSLACK, D, T, NODE, ADM, VEH, open0, cp, nreal)
            applied = move_f2[0]
            mlog_i[it, 0] = 2
            mlog_i[it, 1] = c1
            mlog_i[it, 2] = a
            mlog_i[it, 3] = p1
            mlog_i[it, 4] = c2
            mlog_i[it, 5] = b
            mlog_i[it, 6] = p2

        if period > 0 and (it + 1) % period == 0 and nreal < bf_limit:
            exhaustive_reassign_inplace(routes, rlen, rveh, RMETA, SS, SE, CUMD,
                                        SUFW, SUFDEL, SUFSLACK, D, T, NODE,
                                        ADM, VEH, open0, cp, nreal)

        total, k_act, feas = _solution_state(routes, rlen, RMETA)
        max_r = routes.shape[0]
        for r in range(max_r):
            for k in range(rlen[r]):
                node = routes[r, k]
                if total < BPC[node, r]:
                    BPC[node, r] = total
        if feas == 1:
            _maybe_snapshot(0, total, k_act, routes, rlen, rveh,
                            best_routes, best_rlen, best_rveh, best_meta, obj_mode)
        _maybe_snapshot(1, total, k_act, routes, rlen, rveh,
                        best_routes, best_rlen, best_rveh, best_meta, obj_mode)

        trace[it, 0] = total
        trace[it, 1] = best_meta[1, 0]  # unconditional best-so-far (monotone)
        trace[it, 2] = float(mlog_i[it, 0])
        trace[it, 3] = applied
        mlog_f[it, 0] = applied
        mlog_f[it, 1] = move_f[1] if kind == 1 else move_f2[1]
    return it1


# ---------------------------------------------------------------------------
# step 4: intra-route improvement
# ---------------------------------------------------------------------------

@njit(cache=True)
def intra_improve(seq, m, veh, D, T, NODE, ADM, VEH, open0, cp,
                  max_block, use_reversed):
    """Relocate blocks of 1..max_block consecutive stops within one route.

    First strict FULL-cost improvement is committed and the scan restarts;
    a candidate that breaks a previously penalty-free route is rejected.
    Mutates ``seq`` in place and returns the final cost.
    """
    out = np.zeros(RE_SIZE)
    cost = route_eval(seq, m, veh, D, T, NODE, ADM, VEH, open0, cp, MODE_FULL, out)
    if m <= 1:
        return cost
    penalty_free = (out[RE_PD] + out[RE_PV] + out[RE_PW] + out[RE_PCV]) <= EPS
    scratch = np.zeros(m, dtype=np.int64)

    improved = True
    while improved:
        improved = False
        for b in range(1, max_block + 1):
            if b > m:
                break
            for start in range(0, m - b + 1):
                for ins in range(0, m - b + 1):
                    nrev = 2 if (b > 1 and use_reversed == 1) else 1
                    for rev in range(nrev):
                        if ins == start and rev == 0:
                            continue
                        idx = 0
                        ri = 0
                        placed = False
                        for k in range(m):
                            if start <= k < start + b:
                                continue
                            if ri == ins and not placed:
                                for t in range(b):
                                    src = start + (b - 1 - t) if rev == 1 else start + t
                                    scratch[idx] = seq[src]
                                    idx += 1
                                placed = True
                            scratch[idx] = seq[k]
                            idx += 1
                            ri += 1
                        if not placed:
                            for t in range(b):
                                src = start + (b - 1 - t) if rev == 1 else start + t
                                scratch[idx] = seq[src]
                                idx += 1
                        cand = route_eval(scratch, m, veh, D, T, NODE, ADM, VEH,
                                          open0, cp, MODE_FULL, out)
                        cand_free = (out[RE_PD] + out[RE_PV] + out[RE_PW]
                                     + out[RE_PCV]) <= EPS
                        if penalty_free and not cand_free:
                            continue
                        if cand < cost - 1e-12:
                            for k in range(m):
                                seq[k] = scratch[k]
                            cost = cand
                            penalty_free = cand_free
                            improved = True
                            break
                    if improved:
                        break
                if improved:
                    break
            if improved:
                break
    return cost
