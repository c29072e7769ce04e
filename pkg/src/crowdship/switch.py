"""Greedy switching of PDOs from SPVs onto the dedicated-vehicle route.

The working state is priced as::

    sum(SPV plan costs) + DV route cost + F_d * estimated DV count

where an SPV plan costs its detour plus ``e`` per PDO and the DV count is
``load // q_d + 1`` for a non-empty route. Each switch lowers this estimate
by exactly the logged saving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .domain import Instance, SpvPlan, make_spv_plan, route_offsets, spv_plan_feasible
from .dvrp import DvMetric, DvRoute, Location, deliverable_alone
from .errors import ContractError
from .kpaths import generate_candidate_routes

NON_IMPROVING = -math.inf


@dataclass(frozen=True)
class SwitchCandidate:
    pdo: int
    spv_cost: float
    nearest_dv_stop: int
    insertion_cost: float
    triggers_new_dv: bool
    saving: float
    link: tuple = ()  # (i, j) link that receives the PDO; empty when it joins an existing stop


def estimated_dv_count(load: int, q: int) -> int:
    return 0 if load <= 0 else load // q + 1


def triggers_new_dv(load: int, q_i: int, q: int) -> bool:
    """Load test ``int((load + q_i)/q) > int(load/q)``; opening the first DV always counts."""
    if load == 0:
        return q_i > 0
    return (load + q_i) // q > load // q


class SpvPlanner:
    """Best candidate route for a given PDO set of one SPV, memoised."""

    def __init__(self, instance: Instance, routes_by_spv: dict):
        self.instance = instance
        self.routes = routes_by_spv
        self._offsets = {}
        self._best = {}

    def _route_offsets(self, k, r):
        key = (k, r)
        if key not in self._offsets:
            self._offsets[key] = route_offsets(self.instance, self.routes[k][r].path)
        return self._offsets[key]

    def feasible(self, k, r, pdos) -> bool:
        route = self.routes[k][r]
        if route.is_null_route:
            return not pdos
        if not pdos <= route.servable:
            return False
        spv = self.instance.spv_by_id[k]
        return spv_plan_feasible(self.instance, spv, route.path, sorted(pdos), self._route_offsets(k, r))

    def plan_cost(self, k, r, pdos) -> float:
        return self.routes[k][r].detour_cost + self.instance.params.per_pdo_compensation * len(pdos)

    def best(self, k, pdos) -> tuple:
        """(cost, route index) of the cheapest feasible plan; ``None`` if none exists."""
        pdos = frozenset(pdos)
        key = (k, pdos)
        if key not in self._best:
            out = None
            if not pdos:
                out = (0.0, 0)
            else:
                for route in self.routes[k][1:]:
                    if out is not None and route.detour_cost >= out[0]:
                        continue
                    if self.feasible(k, route.index, pdos):
                        c = self.plan_cost(k, route.index, pdos)
                        if out is None or c < out[0]:
                            out = (c, route.index)
            self._best[key] = out
        return self._best[key]


def spv_service_cost(instance: Instance, spv_plan: SpvPlan, pdo, routes=None, planner: SpvPlanner | None = None) -> float:
    """Cost the SPV saves by dropping ``pdo``: current plan cost minus the best plan without it.

    ``routes`` are the SPV's candidate routes (generated when omitted); the
    plan's route must be one of them.
    """
    if pdo not in spv_plan.served_pdos:
        raise ContractError(f"PDO {pdo} is not served by SPV {spv_plan.spv_id}")
    k = spv_plan.spv_id
    if planner is None:
        if routes is None:
            routes = generate_candidate_routes(instance, instance.spv_by_id[k], None)
        planner = SpvPlanner(instance, {k: routes})
    index = next((r.index for r in planner.routes[k] if r.path == tuple(spv_plan.route) and not r.is_null_route), None)
    if index is None:
        raise ContractError(f"SPV {k}: plan route is not among its candidate routes")
    current = planner.plan_cost(k, index, spv_plan.served_pdos)
    rest = planner.best(k, spv_plan.served_pdos - {pdo})
    return current - rest[0]


def _insert_costs(metric, route: DvRoute, i, j):
    """Eq. 41 costs of inserting node ``i`` on the links entering and leaving stop ``j``."""
    pos = route.position(j)
    out = []
    for a, b in ((route.stops[pos - 1], j), (j, route.stops[pos + 1])):
        out.append((metric.cost(a, i) + metric.cost(i, b) - metric.cost(a, b), (a, b)))
    return out


def nearest_stop(metric: DvMetric, route: DvRoute, node):
    """Interior stop closest to ``node`` by DV cost, ties to the smallest node id."""
    best = None
    for j in route.stops[1:-1]:
        key = (metric.cost(node, j), j)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def evaluate_candidate(instance: Instance, dv_route: DvRoute, pdo, spv_cost: float,
                       metric: DvMetric | None = None) -> SwitchCandidate:
    metric = metric or DvMetric(instance)
    q = instance.dv_spec.max_stops
    node = instance.pdo_by_id[pdo].drop_node
    load = dv_route.load
    fixed = instance.dv_spec.fixed_cost
    if load == 0:
        # nothing on the route yet: a fresh depot round trip that opens a DV
        d = instance.depot
        ins = metric.cost(d, node) + metric.cost(node, d)
        saving = spv_cost - ins - fixed
        if 2 * metric.cost(node, d) >= spv_cost:
            saving = NON_IMPROVING
        return SwitchCandidate(pdo, spv_cost, d, ins, True, saving, (d, d))
    j = nearest_stop(metric, dv_route, node)
    if j == node:
        return SwitchCandidate(pdo, spv_cost, j, 0.0, False, spv_cost, ())
    if 2 * metric.cost(node, j) >= spv_cost:
        return SwitchCandidate(pdo, spv_cost, j, math.inf, False, NON_IMPROVING)
    ins, link = min(_insert_costs(metric, dv_route, node, j), key=lambda c: c[0])
    new_dv = triggers_new_dv(load, 1, q)
    return SwitchCandidate(pdo, spv_cost, j, ins, new_dv, spv_cost - ins - (fixed if new_dv else 0.0), link)


@dataclass
class SwitchState:
    """SPV plans as ``spv id -> (route index, PDO set)`` plus the single DV route."""

    spv_plans: dict
    dv_route: DvRoute
    switched: set = field(default_factory=set)


@dataclass(frozen=True)
class SwitchLogEntry:
    pdo: int
    spv_id: int
    saving: float
    new_load: int
    estimate_before: float
    estimate_after: float


def _dv_deliverable(instance, pdo, metric) -> bool:
    pd = instance.pdo_by_id[pdo]
    return deliverable_alone(instance, Location(pd.drop_node, (pdo,), pd.earliest_pickup, pd.latest_delivery), metric)


def estimate_cost(instance: Instance, planner: SpvPlanner, state: SwitchState, metric: DvMetric) -> float:
    spv = 0.0
    for k in sorted(state.spv_plans):
        r, pdos = state.spv_plans[k]
        if r:
            spv += planner.plan_cost(k, r, pdos)
    dv = state.dv_route.cost(metric)
    return spv + dv + instance.dv_spec.fixed_cost * estimated_dv_count(state.dv_route.load, instance.dv_spec.max_stops)


def _apply(route: DvRoute, node, pdo, cand: SwitchCandidate):
    if not cand.link:
        pos = route.position(node)
        route.served_pdos[pos] = tuple(sorted(route.served_pdos[pos] + (pdo,)))
        return
    a, b = cand.link
    for k in range(len(route.stops) - 1):
        if route.stops[k] == a and route.stops[k + 1] == b:
            route.stops.insert(k + 1, node)
            route.served_pdos.insert(k + 1, (pdo,))
            route.stop_times = []  # stale: the estimation route carries no schedule
            return
    raise ContractError(f"link {cand.link} vanished from the DV route")


def switch_loop(instance: Instance, state: SwitchState, planner: SpvPlanner,
                metric: DvMetric | None = None) -> list:
    """Switch the max-positive-saving PDO until none remains; mutates ``state``."""
    metric = metric or DvMetric(instance)
    log = []
    service = {}  # (spv, pdo set) -> {pdo: service cost}
    ok_for_dv = {}
    while True:
        best = None
        for k in sorted(state.spv_plans):
            r, pdos = state.spv_plans[k]
            if not pdos:
                continue
            key = (k, pdos)
            if key not in service:
                current = planner.plan_cost(k, r, pdos)
                service[key] = {p: current - planner.best(k, pdos - {p})[0] for p in pdos}
            for p in sorted(pdos):
                if p not in ok_for_dv:
                    ok_for_dv[p] = _dv_deliverable(instance, p, metric)
                if not ok_for_dv[p]:
                    continue
                cand = evaluate_candidate(instance, state.dv_route, p, service[key][p], metric)
                if cand.saving > 0 and (best is None or cand.saving > best[1].saving):
                    best = (k, cand)
        if best is None:
            return log
        k, cand = best
        before = estimate_cost(instance, planner, state, metric)
        r, pdos = state.spv_plans[k]
        rest = pdos - {cand.pdo}
        state.spv_plans[k] = (planner.best(k, rest)[1], rest)
        _apply(state.dv_route, instance.pdo_by_id[cand.pdo].drop_node, cand.pdo, cand)
        state.switched.add(cand.pdo)
        after = estimate_cost(instance, planner, state, metric)
        log.append(SwitchLogEntry(cand.pdo, k, cand.saving, state.dv_route.load, before, after))


def remaining_savings(instance: Instance, state: SwitchState, planner: SpvPlanner, metric=None) -> list:
    """Savings of every SPV-served PDO against the current DV route."""
    metric = metric or DvMetric(instance)
    out = []
    for k in sorted(state.spv_plans):
        r, pdos = state.spv_plans[k]
        current = planner.plan_cost(k, r, pdos) if pdos else 0.0
        for p in sorted(pdos):
            if not _dv_deliverable(instance, p, metric):
                continue
            c = current - planner.best(k, pdos - {p})[0]
            out.append(evaluate_candidate(instance, state.dv_route, p, c, metric).saving)
    return out


def plans_from_state(instance: Instance, planner: SpvPlanner, spv_plans: dict) -> dict:
    out = {}
    for k, (r, pdos) in sorted(spv_plans.items()):
        if r and pdos:
            out[k] = make_spv_plan(instance, k, planner.routes[k][r].path, pdos)
    return out
