"""PDO -> SPV-route assignment.

Maximise ``reward * matched - sum(detour cost of chosen routes)`` with at most
one route per SPV and at most ``max_stops`` PDOs per chosen route. Backends:

* ``exact``   -- branch-and-bound over route choices, each leaf solved as a
  bipartite b-matching (refuses oversized problems with ``CapacityError``).
* ``benders`` -- master over route choices, transportation subproblem whose
  min-cut duals produce optimality cuts.
* ``greedy``  -- lazy greedy cover plus local repair, for large problems.
* ``auto``    -- exact when small enough, then benders, then greedy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import CapacityError, ContractError

EXACT_LIMIT = 10**4
BENDERS_ROUTE_LIMIT = 40
MAX_BENDERS_ITER = 500
IMPROVE = 1e-9


@dataclass
class AssignmentProblem:
    routes: dict  # spv id -> list[CandidateRoute], index 0 is the null route
    pdos: tuple
    reward: float
    caps: dict  # spv id -> max PDOs on its chosen route

    def __post_init__(self):
        self.pdos = tuple(sorted(self.pdos))
        pset = set(self.pdos)
        worst = 0.0
        self._servable = {}
        self._options = {}
        for k, routes in self.routes.items():
            if not routes or not routes[0].is_null_route:
                raise ContractError(f"SPV {k}: the null route must be candidate 0")
            for r in routes:
                worst = max(worst, r.detour_cost)
                self._servable[(k, r.index)] = r.servable & pset if not r.is_null_route else frozenset()
        if not self.reward > worst:
            raise ContractError(f"reward {self.reward} must exceed the largest detour cost {worst}")

    @classmethod
    def from_instance(cls, instance, routes_by_spv, pdo_ids=None, reward=None):
        if pdo_ids is None:
            pdo_ids = [p.id for p in instance.pdos]
        if reward is None:
            reward = default_reward(instance, routes_by_spv)
        caps = {k: instance.spv_by_id[k].max_stops for k in routes_by_spv}
        return cls(dict(routes_by_spv), tuple(pdo_ids), reward, caps)

    def servable(self, k, r) -> frozenset:
        return self._servable[(k, r)]

    def cost(self, k, r) -> float:
        return self.routes[k][r].detour_cost

    @property
    def spv_ids(self) -> list:
        return sorted(self.routes)


def default_reward(instance, routes_by_spv) -> float:
    worst = max((r.detour_cost for rs in routes_by_spv.values() for r in rs), default=0.0)
    return 10.0 * (instance.dv_spec.fixed_cost + max(worst, 0.0)) or 10.0


@dataclass
class AssignmentResult:
    chosen_route: dict  # spv id -> route index (0 = null)
    pdo_assignment: dict  # pdo id -> (spv id, route index) or None
    objective: float
    converged: bool = True
    backend: str = ""
    bounds: list = field(default_factory=list)  # Benders: (iteration, LB, UB)

    @property
    def matched(self) -> int:
        return sum(1 for v in self.pdo_assignment.values() if v is not None)

    def pdos_of(self, spv_id) -> list:
        return sorted(p for p, v in self.pdo_assignment.items() if v is not None and v[0] == spv_id)


def objective_value(problem: AssignmentProblem, result: AssignmentResult) -> float:
    matched = sum(1 for v in result.pdo_assignment.values() if v is not None)
    spent = sum(problem.cost(k, r) for k, r in result.chosen_route.items() if r != 0)
    return problem.reward * matched - spent


# ----------------------------------------------------------- subproblem
@dataclass
class SubproblemResult:
    x: dict  # pdo id -> (spv id, route index)
    lambda_p: dict  # pdo id -> dual of "served at most once"
    lambda_r: dict  # (spv id, route index) -> dual of the route capacity row
    value: float


def _bmatch(problem, active, pdos=None):
    """Maximum b-matching of PDOs onto active routes (augmenting paths).

    ``active`` maps spv id -> route index. Returns ``pdo -> (k, r)``.
    """
    pdos = problem.pdos if pdos is None else pdos
    adj = {}
    for k, r in active.items():
        if r == 0:
            continue
        for p in problem.servable(k, r):
            adj.setdefault(p, []).append((k, r))
    for p in adj:
        adj[p].sort()
    load = {}
    holders = {}
    match = {}

    def augment(p, seen):
        for key in adj.get(p, ()):
            if key in seen:
                continue
            seen.add(key)
            k = key[0]
            if load.get(key, 0) < problem.caps[k]:
                match[p] = key
                load[key] = load.get(key, 0) + 1
                holders.setdefault(key, []).append(p)
                return True
            for other in list(holders[key]):
                if augment(other, seen):
                    # ``other`` moved elsewhere; ``p`` takes its slot
                    holders[key].remove(other)
                    holders[key].append(p)
                    match[p] = key
                    return True
        return False

    for p in pdos:
        if p in adj:
            augment(p, set())
    return match


def solve_subproblem(problem: AssignmentProblem, fixed_z: dict) -> SubproblemResult:
    """Transportation subproblem for a fixed route choice, with optimal duals.

    Duals come from the min cut of the final residual network: PDOs that
    cannot be reached from an unmatched PDO price at ``reward``, routes that
    can price at ``reward``. They satisfy ``lambda_p + lambda_r >= reward``
    on every servable pair, including routes not chosen.
    """
    for k, r in fixed_z.items():
        if k not in problem.routes or not 0 <= r < len(problem.routes[k]):
            raise ContractError(f"invalid route choice {k}:{r}")
    w = problem.reward
    match = _bmatch(problem, fixed_z)
    holders = {}
    for p, key in match.items():
        holders.setdefault(key, []).append(p)
    by_pdo = {}
    for k, routes in problem.routes.items():
        for r in range(1, len(routes)):
            for p in problem.servable(k, r):
                by_pdo.setdefault(p, []).append((k, r))
    reach_p = set(p for p in problem.pdos if p not in match)
    reach_r = set()
    frontier = list(reach_p)
    while frontier:
        p = frontier.pop()
        for key in by_pdo.get(p, ()):
            if key in reach_r:
                continue
            reach_r.add(key)
            for q in holders.get(key, ()):
                if q not in reach_p:
                    reach_p.add(q)
                    frontier.append(q)
    lambda_p = {p: (0.0 if p in reach_p else w) for p in problem.pdos}
    lambda_r = {}
    for k, routes in problem.routes.items():
        for r in range(1, len(routes)):
            lambda_r[(k, r)] = w if (k, r) in reach_r else 0.0
    spent = sum(problem.cost(k, r) for k, r in fixed_z.items() if r != 0)
    return SubproblemResult(match, lambda_p, lambda_r, w * len(match) - spent)


def _result(problem, choice, backend, **kw) -> AssignmentResult:
    match = _bmatch(problem, choice)
    chosen = {k: choice.get(k, 0) for k in problem.spv_ids}
    assignment = {p: match.get(p) for p in problem.pdos}
    res = AssignmentResult(chosen, assignment, 0.0, backend=backend, **kw)
    res.objective = objective_value(problem, res)
    return res


# ------------------------------------------------------- option pruning
def route_options(problem: AssignmentProblem, k) -> list:
    """Non-dominated route indices for SPV ``k`` (null route first).

    Route ``r`` is dropped when another route serves a superset of its PDOs
    at a lower cost, or at equal cost with a smaller index.
    """
    cached = problem._options.get(k)
    if cached is not None:
        return cached
    routes = problem.routes[k]
    best = {}
    for r in range(1, len(routes)):
        s = problem.servable(k, r)
        c = routes[r].detour_cost
        if not s and c >= 0:
            continue
        if s not in best or (c, r) < best[s]:
            best[s] = (c, r)
    items = sorted((c, r, s) for s, (c, r) in best.items())
    kept = []
    for c, r, s in items:
        dominated = False
        for c2, r2, s2 in kept:
            if s <= s2 and (c2 < c or (c2 == c and r2 < r)):
                dominated = True
                break
        if not dominated and (s or c < 0):
            kept.append((c, r, s))
    out = problem._options[k] = [0] + sorted(r for _, r, _ in kept)
    return out


def combination_count(problem: AssignmentProblem) -> int:
    total = 1
    for k in problem.spv_ids:
        total *= len(route_options(problem, k))
    return total


# ----------------------------------------------------------- exact B&B
def solve_assignment_exact(problem: AssignmentProblem, limit: int = EXACT_LIMIT) -> AssignmentResult:
    """Globally optimal assignment; ties go to the lexicographically smallest
    vector of route indices in SPV-id order."""
    spvs = problem.spv_ids
    options = {k: route_options(problem, k) for k in spvs}
    combos = 1
    for k in spvs:
        combos *= len(options[k])
        if combos > limit:
            raise CapacityError(f"{combos}+ route combinations exceed the exact limit {limit}")
    w = problem.reward
    npdos = len(problem.pdos)
    # optimistic contribution of SPVs k..end
    tail_cover = [0] * (len(spvs) + 1)
    tail_union = [frozenset()] * (len(spvs) + 1)
    tail_cost = [0.0] * (len(spvs) + 1)
    for i in range(len(spvs) - 1, -1, -1):
        k = spvs[i]
        cover = max(min(problem.caps[k], len(problem.servable(k, r))) for r in options[k])
        tail_cover[i] = tail_cover[i + 1] + cover
        tail_union[i] = tail_union[i + 1].union(*(problem.servable(k, r) for r in options[k]))
        cheapest = min((problem.cost(k, r) for r in options[k] if r), default=0.0)
        tail_cost[i] = tail_cost[i + 1] + min(0.0, cheapest)

    best = {"value": -math.inf, "choice": None}
    choice = {}

    def visit(i, cover, union, spent):
        if i == len(spvs):
            value = w * len(_bmatch(problem, choice)) - spent
            if value > best["value"] + IMPROVE:
                best["value"] = value
                best["choice"] = dict(choice)
            return
        bound = w * min(npdos, cover + tail_cover[i], len(union | tail_union[i])) - spent - tail_cost[i]
        if bound <= best["value"] + IMPROVE:
            return
        k = spvs[i]
        for r in options[k]:
            choice[k] = r
            s = problem.servable(k, r)
            visit(i + 1, cover + min(problem.caps[k], len(s)), union | s, spent + (problem.cost(k, r) if r else 0.0))
        del choice[k]

    visit(0, 0, frozenset(), 0.0)
    return _result(problem, best["choice"] or {}, "exact")


# -------------------------------------------------------------- Benders
@dataclass
class BendersState:
    lower_bound: float = -math.inf
    upper_bound: float = math.inf
    cuts: list = field(default_factory=list)  # (alpha, {(k, r): beta})
    duals: list = field(default_factory=list)  # per iteration (lambda_p, lambda_r)
    iteration: int = 0
    tolerance: float = 1e-6
    history: list = field(default_factory=list)  # (t, LB, UB)


def _cut_value(cut, choice) -> float:
    alpha, beta = cut
    return alpha + sum(beta.get((k, r), 0.0) for k, r in choice.items() if r != 0)


def _solve_master(problem, keys, groups, cuts, z_cap):
    """max Z s.t. Z <= every cut, one route per SPV, z binary (LP-bounded B&B)."""
    m = len(keys)
    n = m + 1
    c = np.zeros(n)
    c[-1] = -1.0
    rows = []
    rhs = []
    for alpha, beta in cuts:
        row = np.zeros(n)
        row[-1] = 1.0
        for j, key in enumerate(keys):
            row[j] = -beta.get(key, 0.0)
        rows.append(row)
        rhs.append(alpha)
    for members in groups:
        row = np.zeros(n)
        row[members] = 1.0
        rows.append(row)
        rhs.append(1.0)
    a_ub = np.array(rows)
    b_ub = np.array(rhs)

    def exact_value(zint):
        choice = {}
        for j in np.flatnonzero(zint):
            k, r = keys[j]
            choice[k] = r
        value = min(_cut_value(cut, choice) for cut in cuts)
        return min(value, z_cap), choice

    best_val, best_choice = -math.inf, {}
    stack = [(np.zeros(m), np.ones(m))]
    while stack:
        lo, hi = stack.pop()
        bounds = [(lo[j], hi[j]) for j in range(m)] + [(None, z_cap)]
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status != 0:
            continue
        val = -res.fun
        if val <= best_val + IMPROVE:
            continue
        z = res.x[:m]
        frac = np.abs(z - np.round(z))
        j = int(np.argmax(frac)) if m else 0
        if m == 0 or frac[j] < 1e-6:
            value, choice = exact_value(np.round(z).astype(int))
            if value > best_val + IMPROVE:
                best_val, best_choice = value, choice
            continue
        lo0, hi0 = lo.copy(), hi.copy()
        hi0[j] = 0.0
        lo1, hi1 = lo.copy(), hi.copy()
        lo1[j] = 1.0
        stack.append((lo0, hi0))
        stack.append((lo1, hi1))
    return best_val, best_choice


def solve_assignment_benders(problem: AssignmentProblem, epsilon: float = 1e-6, max_iter: int = MAX_BENDERS_ITER,
                             state: BendersState | None = None) -> AssignmentResult:
    """Benders decomposition over route choices.

    LB is the best subproblem value seen, UB the master optimum; stops when
    ``UB - LB <= epsilon``. Cuts use the subproblem duals:
    ``Z <= sum(lambda_p) + sum((cap * lambda_r - cost) * z_r)``.
    """
    state = state or BendersState(tolerance=epsilon)
    keys = []
    groups = []
    for k in problem.spv_ids:
        members = []
        for r in route_options(problem, k)[1:]:
            members.append(len(keys))
            keys.append((k, r))
        if members:
            groups.append(members)
    z_cap = problem.reward * len(problem.pdos) - sum(min(0.0, problem.cost(k, r)) for k, r in keys)

    choice = {}
    incumbent = {}
    converged = False
    for t in range(1, max_iter + 1):
        state.iteration = t
        sp = solve_subproblem(problem, choice)
        state.duals.append((sp.lambda_p, sp.lambda_r))
        alpha = sum(sp.lambda_p.values())
        beta = {(k, r): problem.caps[k] * sp.lambda_r.get((k, r), 0.0) - problem.cost(k, r) for k, r in keys}
        state.cuts.append((alpha, beta))
        if sp.value > state.lower_bound + IMPROVE:
            state.lower_bound = sp.value
            incumbent = dict(choice)
        ub, choice = _solve_master(problem, keys, groups, state.cuts, z_cap)
        state.upper_bound = min(state.upper_bound, ub)
        state.history.append((t, state.lower_bound, state.upper_bound))
        if state.upper_bound - state.lower_bound <= epsilon:
            converged = True
            break
    return _result(problem, incumbent, "benders", converged=converged, bounds=list(state.history))


# --------------------------------------------------------------- greedy
def solve_assignment_greedy(problem: AssignmentProblem) -> AssignmentResult:
    """Lazy greedy: repeatedly give the SPV covering the most unmatched PDOs
    (cheapest route on ties) its route, then re-match and tighten routes."""
    import heapq

    w = problem.reward
    options = {}
    for k in problem.spv_ids:
        best = {}
        for r in range(1, len(problem.routes[k])):
            s = problem.servable(k, r)
            if not s:
                continue
            key = (problem.cost(k, r), r)
            if s not in best or key < best[s]:
                best[s] = key
        options[k] = sorted((c, r, s) for s, (c, r) in best.items())
    servers = {p: 0 for p in problem.pdos}
    for k, opts in options.items():
        for p in frozenset().union(*(s for _, _, s in opts)) if opts else ():
            servers[p] += 1

    unmatched = set(problem.pdos)

    def best_move(k):
        cap = problem.caps[k]
        top = None
        for c, r, s in options[k]:
            g = min(cap, len(s & unmatched)) if s else 0
            if g == 0:
                continue
            key = (-g, c, r)
            if top is None or key < top:
                top = key
        return top

    heap = []
    order = {k: i for i, k in enumerate(problem.spv_ids)}
    for k in problem.spv_ids:
        mv = best_move(k)
        if mv is not None:
            heap.append((mv[0], mv[1], order[k], mv[2], k))
    heapq.heapify(heap)
    choice = {}
    while heap:
        g, c, o, r, k = heapq.heappop(heap)
        mv = best_move(k)
        if mv is None:
            continue
        entry = (mv[0], mv[1], o, mv[2], k)
        if heap and entry > heap[0]:
            heapq.heappush(heap, entry)
            continue
        if w * -mv[0] - mv[1] <= 0:
            continue
        r = mv[2]
        s = problem.servable(k, r) & unmatched
        take = sorted(s, key=lambda p: (servers[p], p))[: problem.caps[k]]
        choice[k] = r
        unmatched.difference_update(take)

    match = _bmatch(problem, choice)
    assigned = {}
    for p, (k, r) in match.items():
        assigned.setdefault(k, set()).add(p)
    unmatched = set(problem.pdos) - set(match)
    final = {}
    for k in problem.spv_ids:
        mine = assigned.get(k, set())
        cap = problem.caps[k]
        pick = None
        for c, r, s in options[k]:
            if not mine <= s:
                continue
            gain = min(cap - len(mine), len(s & unmatched))
            key = (-gain, c, r)
            if pick is None or key < pick[0]:
                pick = (key, r, s)
        if pick is None or (not mine and (pick[0][0] == 0 or w * -pick[0][0] - pick[0][1] <= 0)):
            continue
        (neg_gain, c, r), _, s = pick
        final[k] = r
        extra = sorted(s & unmatched)[: -neg_gain] if neg_gain else []
        unmatched.difference_update(extra)
    # routes left empty by the re-match only cost money
    match = _bmatch(problem, final)
    used = {key[0] for key in match.values()}
    final = {k: r for k, r in final.items() if k in used or problem.cost(k, r) < 0}
    return _result(problem, final, "greedy")


def solve_assignment(problem: AssignmentProblem, backend: str = "auto", epsilon: float = 1e-6,
                     exact_limit: int = EXACT_LIMIT, benders_route_limit: int = BENDERS_ROUTE_LIMIT,
                     max_iter: int = MAX_BENDERS_ITER) -> AssignmentResult:
    if backend == "exact":
        return solve_assignment_exact(problem, exact_limit)
    if backend == "benders":
        return solve_assignment_benders(problem, epsilon, max_iter)
    if backend == "greedy":
        return solve_assignment_greedy(problem)
    if backend != "auto":
        raise ValueError(f"unknown assignment backend {backend!r}")
    try:
        return solve_assignment_exact(problem, exact_limit)
    except CapacityError:
        pass
    n_routes = sum(len(route_options(problem, k)) - 1 for k in problem.spv_ids)
    if n_routes <= benders_route_limit:
        res = solve_assignment_benders(problem, epsilon, max_iter)
        if res.converged:
            return res
    return solve_assignment_greedy(problem)
