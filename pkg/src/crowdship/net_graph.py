"""Directed road network, shortest paths and per-class time/cost conversion."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple

from . import kernels
from .errors import ContractError, NoPathError, UnknownArcError


class VehicleClass(str, Enum):
    SPV = "spv"
    DV = "dv"


SPV = VehicleClass.SPV
DV = VehicleClass.DV


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    length: float  # miles


@dataclass(frozen=True)
class CostModel:
    """Speeds (mph) and per-mile rates ($/mi) for both vehicle classes."""

    spv_speed: float = 40.0
    dv_speed: float = 30.0
    spv_rate: float = 0.56
    dv_rate: float = 1.5

    def __post_init__(self):
        for name in ("spv_speed", "dv_speed", "spv_rate", "dv_rate"):
            value = getattr(self, name)
            if not value > 0:
                raise ContractError(f"{name} must be strictly positive, got {value}")

    def speed(self, vehicle_class) -> float:
        if vehicle_class is SPV:
            return self.spv_speed
        if vehicle_class is DV:
            return self.dv_speed
        return self.spv_speed if VehicleClass(vehicle_class) is SPV else self.dv_speed

    def rate(self, vehicle_class) -> float:
        if vehicle_class is SPV:
            return self.spv_rate
        if vehicle_class is DV:
            return self.dv_rate
        return self.spv_rate if VehicleClass(vehicle_class) is SPV else self.dv_rate

    def minutes(self, miles: float, vehicle_class) -> float:
        return miles / self.speed(vehicle_class) * 60.0

    def dollars(self, miles: float, vehicle_class) -> float:
        return miles * self.rate(vehicle_class)


class ArcMetrics(NamedTuple):
    travel_time: float  # minutes
    cost: float  # dollars


class PathResult(NamedTuple):
    nodes: tuple
    total_time: float
    total_cost: float
    total_miles: float


class Network:
    """Immutable directed graph with lazily cached shortest-path trees.

    Node ids are integers; internally they map to dense indices in ascending
    id order, so "smallest index" and "smallest id" agree for tie-breaking.
    """

    def __init__(self, nodes: Iterable[int], arcs: Iterable[Arc], coords: Mapping[int, tuple] | None = None):
        self.nodes = tuple(sorted(set(nodes)))
        self.index = {v: i for i, v in enumerate(self.nodes)}
        arc_map = {}
        for arc in arcs:
            if arc.tail == arc.head:
                raise ContractError(f"self-loop arc at node {arc.tail}")
            if arc.tail not in self.index or arc.head not in self.index:
                raise ContractError(f"arc ({arc.tail}, {arc.head}) references an undeclared node")
            if not arc.length > 0:
                raise ContractError(f"arc ({arc.tail}, {arc.head}): length must be positive")
            if (arc.tail, arc.head) in arc_map:
                raise ContractError(f"duplicate arc ({arc.tail}, {arc.head})")
            arc_map[(arc.tail, arc.head)] = arc
        self.arcs = arc_map
        self.coords = dict(coords) if coords else {}

        out = {v: [] for v in self.nodes}
        inc = {v: [] for v in self.nodes}
        for (t, h), arc in arc_map.items():
            out[t].append(arc)
            inc[h].append(arc)
        self.adjacency = {v: tuple(sorted(out[v], key=lambda a: a.head)) for v in self.nodes}
        self._fwd = self._csr(self.adjacency, lambda a: a.head)
        rev = {v: tuple(sorted(inc[v], key=lambda a: a.tail)) for v in self.nodes}
        self._rev = self._csr(rev, lambda a: a.tail)
        self._from_cache = {}
        self._to_cache = {}

    @classmethod
    def from_undirected(cls, nodes, edges, coords=None):
        """Build from ``(u, v, length)`` edges, expanding each into two arcs."""
        arcs = []
        for u, v, length in edges:
            arcs.append(Arc(u, v, length))
            arcs.append(Arc(v, u, length))
        return cls(nodes, arcs, coords)

    def _csr(self, adjacency, other_end):
        indptr = [0]
        indices = []
        lengths = []
        for v in self.nodes:
            for arc in adjacency[v]:
                indices.append(self.index[other_end(arc)])
                lengths.append(arc.length)
            indptr.append(len(indices))
        return indptr, indices, lengths

    # -- structure -----------------------------------------------------
    def __contains__(self, node) -> bool:
        return node in self.index

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.nodes == other.nodes and self.arcs == other.arcs and self.coords == other.coords

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"Network(nodes={len(self.nodes)}, arcs={len(self.arcs)})"

    def arc(self, tail, head) -> Arc:
        try:
            return self.arcs[(tail, head)]
        except KeyError:
            raise UnknownArcError(f"no arc ({tail}, {head})") from None

    def csr(self, weight=None):
        """Forward CSR triple; ``weight`` maps an arc length to a custom weight."""
        indptr, indices, lengths = self._fwd
        if weight is None:
            return indptr, indices, lengths
        return indptr, indices, [weight(x) for x in lengths]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for (t, hd), arc in sorted(self.arcs.items()):
            h.update(f"{t},{hd},{arc.length!r};".encode())
        h.update(("|" + ",".join(map(str, self.nodes))).encode())
        return h.hexdigest()[:16]

    # -- shortest-path trees (lengths in miles) ------------------------
    def _tree_from(self, source):
        tree = self._from_cache.get(source)
        if tree is None:
            indptr, indices, lengths = self._fwd
            tree = kernels.dijkstra(indptr, indices, lengths, self.index[source])
            self._from_cache[source] = tree
        return tree

    def _tree_to(self, target):
        tree = self._to_cache.get(target)
        if tree is None:
            indptr, indices, lengths = self._rev
            tree = kernels.dijkstra(indptr, indices, lengths, self.index[target])
            self._to_cache[target] = tree
        return tree

    def _check(self, *nodes):
        for v in nodes:
            if v not in self.index:
                raise ContractError(f"unknown node {v}")

    def miles(self, origin, dest) -> float:
        """Shortest-path length in miles; ``inf`` when unreachable."""
        self._check(origin, dest)
        return self._tree_from(origin)[0][self.index[dest]]

    def miles_to(self, target) -> list:
        """Shortest miles from every node (by dense index) to ``target``."""
        self._check(target)
        return self._tree_to(target)[0]

    def path_nodes(self, origin, dest) -> tuple:
        self._check(origin, dest)
        dist, pred = self._tree_from(origin)
        j = self.index[dest]
        if math.isinf(dist[j]):
            raise NoPathError(f"node {dest} unreachable from {origin}")
        seq = [j]
        while seq[-1] != self.index[origin]:
            seq.append(pred[seq[-1]])
        return tuple(self.nodes[i] for i in reversed(seq))

    def path_miles(self, path) -> float:
        total = 0.0
        for a, b in zip(path, path[1:]):
            total += self.arc(a, b).length
        return total

    def is_path(self, path) -> bool:
        return all((a, b) in self.arcs for a, b in zip(path, path[1:]))


def arc_metrics(network: Network, arc, model: CostModel, vehicle_class) -> ArcMetrics:
    """Travel time (minutes) and cost (dollars) of one arc for one vehicle class.

    ``arc`` is an :class:`Arc` or a ``(tail, head)`` pair.
    """
    if isinstance(arc, Arc):
        arc = network.arc(arc.tail, arc.head)
    else:
        arc = network.arc(*arc)
    return ArcMetrics(model.minutes(arc.length, vehicle_class), model.dollars(arc.length, vehicle_class))


def path_metrics(network: Network, path, model: CostModel, vehicle_class) -> PathResult:
    """Totals along an explicit node sequence, summing arc metrics in order."""
    time = cost = miles = 0.0
    for a, b in zip(path, path[1:]):
        m = arc_metrics(network, (a, b), model, vehicle_class)
        time += m.travel_time
        cost += m.cost
        miles += network.arcs[(a, b)].length
    return PathResult(tuple(path), time, cost, miles)


def shortest_path(network: Network, origin, dest, vehicle_class, model: CostModel | None = None) -> PathResult:
    """Minimum-time path. Raises :class:`NoPathError` when ``dest`` is unreachable."""
    model = model or CostModel()
    return path_metrics(network, network.path_nodes(origin, dest), model, vehicle_class)
