"""Budgeted simple-path enumeration and SPV candidate routes.

Two engines return the same set: a depth-first enumeration (compiled kernel
when available) and a budgeted Yen search. Candidate routes annotate each
enumerated depot->destination path with the PDOs it can serve.
"""
from __future__ import annotations

import heapq
import json
import math
import os
import tempfile
from dataclasses import dataclass

from . import kernels
from .domain import Instance, Spv, spv_detour_cost, spv_ready_at_depot, TIME_TOL
from .net_graph import SPV, Network

SLACK = 1e-9
DEFAULT_MAX_ROUTES = 200


@dataclass(frozen=True)
class BudgetedPathQuery:
    source: int
    target: int
    budget: float  # minutes

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")


@dataclass(frozen=True)
class CandidateRoute:
    spv_id: int
    index: int  # 0 is always the null route
    path: tuple
    travel_time: float
    detour_cost: float
    servable: frozenset  # PDO ids this route can feasibly serve
    is_null_route: bool = False

    def can_serve(self, pdo_id) -> bool:
        return pdo_id in self.servable


def _route_order(pt):
    path, time = pt
    return kernels.tick(time), path


def _spv_weights(network: Network, model):
    return network.csr(lambda length: model.minutes(length, SPV))


def _times_to(network: Network, target, model) -> list:
    return [model.minutes(x, SPV) for x in network.miles_to(target)]


def enumerate_paths_recursive(network: Network, query: BudgetedPathQuery, model=None, *, k: int | None = None):
    """All simple ``source -> target`` paths with SPV travel time ``<= budget``.

    Depth-first search over simple paths (the visited set forbids revisits),
    pruned by the budget and by exact remaining-time lower bounds, which
    never removes a qualifying path. Returns ``{(path, time)}``; with ``k``
    set, only the ``k`` fastest paths are kept, comparing times quantised to
    1e-6 minutes and breaking ties by node sequence.
    """
    from .net_graph import CostModel

    model = model or CostModel()
    return set(_dfs_paths(network, query, model, k))


WIDEN = 1.5


def _dfs_paths(network, query, model, k=None):
    index = network.index
    indptr, indices, weights = _spv_weights(network, model)
    lower = _times_to(network, query.target, model)
    s, t = index[query.source], index[query.target]
    budget = float(query.budget)
    if k is None:
        found = kernels.budget_paths(indptr, indices, weights, s, t, budget, lower, -1)
    else:
        # Widen the cut from the shortest time until the k best are provably
        # inside it; the number of paths grows exponentially with the cut.
        shortest = lower[s]
        delta = max(shortest * 0.25, 1.0)
        while True:
            cut = min(budget, shortest + delta)
            found = kernels.budget_paths(indptr, indices, weights, s, t, cut, lower, int(k))
            if cut >= budget:
                break
            if len(found) >= k and kernels.tick(found[-1][0]) < kernels.tick(cut + SLACK):
                break
            delta *= WIDEN
    nodes = network.nodes
    return [(tuple(nodes[i] for i in path), time) for time, path in found]


def enumerate_paths_yen(network: Network, query: BudgetedPathQuery, model=None):
    """Budgeted Yen search: k-shortest simple paths, stopping once the next
    candidate exceeds the budget. Same contract as the recursive engine."""
    from .net_graph import CostModel

    model = model or CostModel()
    index = network.index
    nodes = network.nodes
    s, t = index[query.source], index[query.target]
    limit = query.budget + SLACK
    if s == t:
        return {((query.source,), 0.0)}
    indptr, indices, weights = _spv_weights(network, model)
    arc_pos = {}
    incoming = [[] for _ in nodes]
    for u in range(len(nodes)):
        for e in range(indptr[u], indptr[u + 1]):
            arc_pos[(u, indices[e])] = e
            incoming[indices[e]].append(e)

    def cost_of(path):
        total = 0.0
        for a, b in zip(path, path[1:]):
            total += weights[arc_pos[(a, b)]]
        return total

    def spur_search(src, blocked_arcs, blocked_nodes):
        w = list(weights)
        for e in blocked_arcs:
            w[e] = math.inf
        for u in blocked_nodes:
            for e in range(indptr[u], indptr[u + 1]):
                w[e] = math.inf
            for e in incoming[u]:
                w[e] = math.inf
        dist, pred = kernels.dijkstra(indptr, indices, w, src)
        if math.isinf(dist[t]):
            return None
        seq = [t]
        while seq[-1] != src:
            seq.append(pred[seq[-1]])
        return tuple(reversed(seq))

    first = spur_search(s, (), ())
    if first is None:
        return set()
    first_cost = cost_of(first)
    if first_cost > limit:
        return set()
    accepted = [first]
    accepted_set = {first}
    heap = []
    queued = set()
    while True:
        last = accepted[-1]
        for i in range(len(last) - 1):
            spur = last[i]
            root = last[: i + 1]
            removed = set()
            for p in accepted:
                if p[: i + 1] == root and len(p) > i + 1:
                    removed.add(arc_pos[(p[i], p[i + 1])])
            # removing root nodes (minus the spur) keeps every join loop-free
            spur_path = spur_search(spur, removed, root[:-1])
            if spur_path is None:
                continue
            total = root[:-1] + spur_path
            assert len(set(total)) == len(total), "spur join formed a loop"
            if total in queued or total in accepted_set:
                continue
            c = cost_of(total)
            if c > limit:
                continue
            queued.add(total)
            heapq.heappush(heap, (c, total))
        if not heap:
            break
        c, best = heapq.heappop(heap)
        queued.discard(best)
        if c > limit:
            break
        accepted.append(best)
        accepted_set.add(best)
    return {(tuple(nodes[i] for i in p), cost_of(p)) for p in accepted}


# ------------------------------------------------------------ SPV routes
def spv_budget(spv: Spv, instance: Instance) -> float | None:
    """Minutes left for the depot->destination leg; ``None`` if the depot is unreachable.

    ``detour_willingness - time(origin->depot) - service_time``, floored at 0.
    """
    if instance.spv_origins_at_depot:
        to_depot = 0.0
    else:
        to_depot = instance.time(spv.origin, instance.depot, SPV)
        if math.isinf(to_depot):
            return None
    return max(0.0, spv.detour_willingness - to_depot - instance.params.service_time)


def spv_has_feasible_budget(spv: Spv, instance: Instance) -> bool:
    """True when at least one depot->destination path fits the SPV's budget."""
    if instance.spv_origins_at_depot:
        raw = spv.detour_willingness - instance.params.service_time
    else:
        to_depot = instance.time(spv.origin, instance.depot, SPV)
        if math.isinf(to_depot):
            return False
        raw = spv.detour_willingness - to_depot - instance.params.service_time
    if raw < 0:
        return False
    return instance.time(instance.depot, spv.destination, SPV) <= raw + SLACK


def null_route(instance: Instance, spv: Spv) -> CandidateRoute:
    start = instance.spv_start(spv)
    try:
        path = instance.network.path_nodes(start, spv.destination)
    except LookupError:
        path = (start, spv.destination)
    return CandidateRoute(spv.id, 0, path, 0.0, 0.0, frozenset(), True)


def _pdos_by_node(instance: Instance) -> dict:
    by_node = {}
    for p in instance.pdos:
        by_node.setdefault(p.drop_node, []).append(p)
    return by_node


def annotate_route(instance: Instance, spv: Spv, path, travel_time, by_node=None) -> frozenset:
    """PDOs individually servable on ``path`` under the timing model."""
    if by_node is None:
        by_node = _pdos_by_node(instance)
    ready = spv_ready_at_depot(instance, spv)
    tau = instance.params.service_time
    if math.isinf(ready):
        return frozenset()
    model = instance.model
    out = []
    offset = 0.0
    for i, node in enumerate(path):
        if i:
            offset += model.minutes(instance.network.arcs[(path[i - 1], node)].length, SPV)
        for p in by_node.get(node, ()):
            dep = max(ready, p.earliest_pickup) + tau
            if dep + offset > p.latest_delivery + TIME_TOL:
                continue
            if dep + travel_time > spv.latest_arrival + TIME_TOL:
                continue
            out.append(p.id)
    return frozenset(out)


def generate_candidate_routes(instance: Instance, spv: Spv, max_routes: int | None = DEFAULT_MAX_ROUTES, engine: str = "dfs"):
    """Null route plus every budget-feasible depot->destination path (fastest first)."""
    routes = [null_route(instance, spv)]
    budget = spv_budget(spv, instance)
    if budget is None or not spv_has_feasible_budget(spv, instance):
        return routes
    query = BudgetedPathQuery(instance.depot, spv.destination, budget)
    if engine == "dfs":
        found = _dfs_paths(instance.network, query, instance.model, max_routes)
    elif engine == "yen":
        found = sorted(enumerate_paths_yen(instance.network, query, instance.model), key=_route_order)
        if max_routes is not None:
            found = found[:max_routes]
    else:
        raise ValueError(f"unknown engine {engine!r}")
    by_node = _pdos_by_node(instance)
    for path, time in sorted(found, key=_route_order):
        routes.append(
            CandidateRoute(
                spv.id,
                len(routes),
                path,
                time,
                spv_detour_cost(instance, spv, path),
                annotate_route(instance, spv, path, time, by_node),
            )
        )
    return routes


class RouteCache:
    """Persisted candidate paths keyed by (network hash, SPV id, budget).

    Only paths and travel times are stored; servable sets and detour costs
    are recomputed against the instance on load.
    """

    def __init__(self, path=None):
        self.path = path
        self.entries = {}
        if path and os.path.exists(path):
            with open(path) as fh:
                doc = json.load(fh)
            if doc.get("schema") != "crowdship-routes/1":
                raise ValueError(f"{path}: not a route cache")
            self.entries = {e["key"]: e["paths"] for e in doc["entries"]}

    @staticmethod
    def key(network: Network, spv_id, budget) -> str:
        return f"{network.fingerprint()}|{spv_id}|{budget:.6f}"

    def routes(self, instance: Instance, spv: Spv, max_routes=DEFAULT_MAX_ROUTES):
        budget = spv_budget(spv, instance)
        if budget is None:
            return [null_route(instance, spv)]
        key = self.key(instance.network, spv.id, budget) + f"|{max_routes}|{int(instance.spv_origins_at_depot)}"
        stored = self.entries.get(key)
        if stored is None:
            routes = generate_candidate_routes(instance, spv, max_routes)
            self.entries[key] = [[list(r.path), r.travel_time] for r in routes[1:]]
            return routes
        routes = [null_route(instance, spv)]
        by_node = _pdos_by_node(instance)
        for path, time in stored:
            path = tuple(path)
            routes.append(
                CandidateRoute(spv.id, len(routes), path, time, spv_detour_cost(instance, spv, path),
                               annotate_route(instance, spv, path, time, by_node))
            )
        return routes

    def save(self, path=None):
        path = path or self.path
        doc = {"schema": "crowdship-routes/1",
               "entries": [{"key": k, "paths": v} for k, v in sorted(self.entries.items())]}
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)
