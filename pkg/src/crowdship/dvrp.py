"""Dedicated-vehicle routing by cheapest insertion.

Routes visit delivery *locations*: all PDOs sharing a drop node ride on one
stop, and stop caps count locations. DVs leave the depot at the latest
release time of their PDOs and never wait, so a stop is on time iff its
arrival is no later than the earliest deadline among its PDOs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .domain import TIME_TOL, DvPlan, Instance, make_dv_plan
from .errors import ContractError, InfeasibleInstanceError
from .net_graph import DV


class DvMetric:
    """DV shortest-path cost/time lookups, memoised per origin node."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self._cost = {}
        self._time = {}

    def _row(self, a):
        row = self._cost.get(a)
        if row is None:
            inst = self.instance
            model = inst.model
            net = inst.network
            dist = net._tree_from(a)[0]
            row = {v: model.dollars(dist[i], DV) for v, i in net.index.items()}
            self._cost[a] = row
            self._time[a] = {v: model.minutes(dist[i], DV) for v, i in net.index.items()}
        return row

    def cost(self, a, b) -> float:
        return self._row(a)[b]

    def time(self, a, b) -> float:
        self._row(a)
        return self._time[a][b]


@dataclass
class Location:
    node: int
    pdos: tuple
    release: float  # latest earliest_pickup among its PDOs
    deadline: float  # earliest latest_delivery among its PDOs

    @property
    def key(self):
        return min(self.pdos)


def group_locations(instance: Instance, pdo_ids) -> list:
    groups = {}
    for pid in sorted(pdo_ids):
        groups.setdefault(instance.pdo_by_id[pid].drop_node, []).append(instance.pdo_by_id[pid])
    out = []
    for node, ps in groups.items():
        out.append(Location(node, tuple(p.id for p in ps), max(p.earliest_pickup for p in ps),
                            min(p.latest_delivery for p in ps)))
    out.sort(key=lambda loc: loc.key)
    return out


@dataclass
class DvRoute:
    stops: list  # depot, ..., depot
    served_pdos: list  # aligned with stops; tuples of PDO ids
    stop_times: list = field(default_factory=list)
    tw_relaxed: bool = False

    @property
    def load(self) -> int:
        return len(self.stops) - 2

    @property
    def pdo_ids(self) -> list:
        return [p for g in self.served_pdos for p in g]

    def cost(self, metric: DvMetric) -> float:
        total = 0.0
        for a, b in zip(self.stops, self.stops[1:]):
            total += metric.cost(a, b)
        return total

    def position(self, node) -> int:
        """Index of an interior stop."""
        for i in range(1, len(self.stops) - 1):
            if self.stops[i] == node:
                return i
        raise ContractError(f"node {node} is not a stop on this route")

    def to_plan(self, instance: Instance) -> DvPlan:
        return make_dv_plan(instance, self.stops[1:-1], self.served_pdos[1:-1])


def empty_route(instance: Instance) -> DvRoute:
    return DvRoute([instance.depot, instance.depot], [(), ()], [0.0, 0.0])


def marginal_insertion_cost(instance: Instance, route: DvRoute, link, u, metric: DvMetric | None = None) -> float:
    """``c(i,u) + c(u,j) - c(i,j)`` for consecutive stops ``(i, j)`` of ``route``."""
    i, j = link
    if not any(a == i and b == j for a, b in zip(route.stops, route.stops[1:])):
        raise ContractError(f"({i}, {j}) is not a link of the route")
    metric = metric or DvMetric(instance)
    return metric.cost(i, u) + metric.cost(u, j) - metric.cost(i, j)


def deliverable_alone(instance: Instance, loc: Location, metric: DvMetric) -> bool:
    t = metric.time(instance.depot, loc.node)
    back = metric.time(loc.node, instance.depot)
    return not (math.isinf(t) or math.isinf(back)) and loc.release + t <= loc.deadline + TIME_TOL


def _undeliverable(instance, locs, metric):
    bad = [p for loc in locs if not deliverable_alone(instance, loc, metric) for p in loc.pdos]
    if bad:
        raise InfeasibleInstanceError(f"PDOs {bad} cannot be delivered by a dedicated vehicle", bad)


class _Tour:
    """Working route with schedule and slack bookkeeping for feasibility tests."""

    def __init__(self, depot, metric):
        self.metric = metric
        self.nodes = [depot, depot]
        self.locs = [None, None]
        self.refresh()

    @property
    def load(self):
        return len(self.nodes) - 2

    def refresh(self):
        locs = self.locs[1:-1]
        self.dep = max((loc.release for loc in locs), default=0.0)
        t = [self.dep]
        for a, b in zip(self.nodes, self.nodes[1:]):
            t.append(t[-1] + self.metric.time(a, b))
        self.times = t
        n = len(self.nodes)
        slack = [math.inf] * n
        for i in range(1, n - 1):
            slack[i] = self.locs[i].deadline - t[i]
        self.pre = [math.inf] * n  # min slack over interior positions 1..i
        for i in range(1, n):
            self.pre[i] = min(self.pre[i - 1], slack[i])
        self.suf = [math.inf] * (n + 1)  # min slack over positions i..n-1
        for i in range(n - 1, 0, -1):
            self.suf[i] = min(self.suf[i + 1], slack[i])

    def insertion(self, loc, k, check_tw=True):
        """Cost of inserting ``loc`` between positions k and k+1, or None if late."""
        m = self.metric
        a, b = self.nodes[k], self.nodes[k + 1]
        cost = m.cost(a, loc.node) + m.cost(loc.node, b) - m.cost(a, b)
        if not check_tw:
            return cost
        new_dep = max(self.dep, loc.release)
        shift = new_dep - self.dep
        arrive = new_dep + (self.times[k] - self.dep) + m.time(a, loc.node)
        if arrive > loc.deadline + TIME_TOL:
            return None
        delay = m.time(a, loc.node) + m.time(loc.node, b) - m.time(a, b)
        if shift > self.pre[k] + TIME_TOL or shift + delay > self.suf[k + 1] + TIME_TOL:
            return None
        return cost

    def best_insertion(self, loc, check_tw=True):
        best = None
        for k in range(len(self.nodes) - 1):
            c = self.insertion(loc, k, check_tw)
            if c is not None and (best is None or c < best[0]):
                best = (c, k)
        return best

    def insert(self, loc, k):
        self.nodes.insert(k + 1, loc.node)
        self.locs.insert(k + 1, loc)
        self.refresh()

    def to_route(self, tw_relaxed=False) -> DvRoute:
        served = [()] + [loc.pdos for loc in self.locs[1:-1]] + [()]
        return DvRoute(list(self.nodes), served, list(self.times), tw_relaxed)


def build_single_route(instance: Instance, pdo_ids, metric: DvMetric | None = None) -> DvRoute:
    """One uncapped cheapest-insertion tour over every location (a cost estimate).

    Time windows are respected where possible; a location with no on-time
    slot is still inserted at its cheapest slot and the route is flagged
    ``tw_relaxed``.
    """
    metric = metric or DvMetric(instance)
    locs = group_locations(instance, pdo_ids)
    _undeliverable(instance, locs, metric)
    tour = _Tour(instance.depot, metric)
    relaxed = False
    pending = list(locs)
    while pending:
        best = None
        for loc in pending:
            ins = tour.best_insertion(loc)
            if ins is None:
                continue
            key = (ins[0], loc.key, ins[1])
            if best is None or key < best[0]:
                best = (key, loc)
        if best is None:
            relaxed = True
            for loc in pending:
                ins = tour.best_insertion(loc, check_tw=False)
                key = (ins[0], loc.key, ins[1])
                if best is None or key < best[0]:
                    best = (key, loc)
        (_, _, k), loc = best
        tour.insert(loc, k)
        pending.remove(loc)
    return tour.to_route(relaxed)


def insertion_mvrp(instance: Instance, pdo_ids, metric: DvMetric | None = None) -> list:
    """Multi-vehicle cheapest insertion with stop caps and time windows.

    Each step inserts the globally cheapest feasible (location, route, link);
    an empty route is always on offer (fleet limit permitting) and its price
    includes the DV fixed cost, so a new DV opens only when it pays for itself
    or nothing else fits. Ties break on (PDO id, route, link).
    """
    metric = metric or DvMetric(instance)
    locs = group_locations(instance, pdo_ids)
    if not locs:
        return []
    _undeliverable(instance, locs, metric)
    cap = instance.dv_spec.max_stops
    limit = instance.dv_spec.fleet_limit
    tours = []
    pending = {loc.key: loc for loc in locs}
    # best[(loc key, tour index)] = (cost, link) or None
    best = {}

    def rescan(t):
        tour = tours[t]
        full = tour.load >= cap
        for key, loc in pending.items():
            best[(key, t)] = None if full else tour.best_insertion(loc)

    opening_fee = instance.dv_spec.fixed_cost
    fresh = _Tour(instance.depot, metric)
    opening = {key: fresh.best_insertion(loc) for key, loc in pending.items()}
    while pending:
        choice = None
        for key in sorted(pending):
            for t in range(len(tours)):
                ins = best.get((key, t))
                if ins is None:
                    continue
                cand = (ins[0], key, t, ins[1])
                if choice is None or cand < choice:
                    choice = cand
            if limit is None or len(tours) < limit:
                ins = opening[key]
                if ins is not None:
                    cand = (ins[0] + opening_fee, key, len(tours), ins[1])
                    if choice is None or cand < choice:
                        choice = cand
        if choice is None:
            culprits = [p for loc in pending.values() for p in loc.pdos]
            raise InfeasibleInstanceError(f"PDOs {culprits} fit no dedicated-vehicle route", culprits)
        _, key, t, k = choice
        loc = pending.pop(key)
        if t == len(tours):
            tours.append(_Tour(instance.depot, metric))
        tours[t].insert(loc, k)
        for kk in list(best):
            if kk[0] == key:
                del best[kk]
        rescan(t)
    return [tour.to_route() for tour in tours]
