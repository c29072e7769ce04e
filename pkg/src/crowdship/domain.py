"""Instance and solution model, the timing model, cost accounting and validation.

Timing model
------------
An SPV leaves its origin at ``earliest_start`` and drives to the depot. It
may wait there for late-released PDOs, spends ``service_time`` loading once,
then follows its route to the destination without further waiting::

    depot_departure = max(ready_at_depot, max earliest_pickup) + service_time

A DV leaves the depot at the latest ``earliest_pickup`` among its PDOs and
drives stop to stop along DV shortest paths with zero service time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, NamedTuple, Sequence

from .errors import ContractError
from .net_graph import DV, SPV, CostModel, Network, arc_metrics

MONEY_TOL = 1e-6
TIME_TOL = 1e-6


@dataclass(frozen=True)
class Pdo:
    id: int
    drop_node: int
    earliest_pickup: int
    latest_delivery: int
    quantity: int = 1  # reporting only; capacity is counted in stops


@dataclass(frozen=True)
class Spv:
    id: int
    origin: int
    destination: int
    earliest_start: int
    latest_arrival: int
    max_stops: int
    detour_willingness: float


@dataclass(frozen=True)
class DvSpec:
    max_stops: int = 60
    fixed_cost: float = 120.0
    fleet_limit: int | None = None


@dataclass(frozen=True)
class CostParams:
    per_pdo_compensation: float = 1.5
    service_time: float = 10.0
    cost_model: CostModel = CostModel()

    def __post_init__(self):
        if self.per_pdo_compensation < 0 or self.service_time < 0:
            raise ContractError("cost parameters must be non-negative")

    # Both rates live on the cost model so time and money derive from one place.
    @property
    def spv_detour_rate(self) -> float:
        return self.cost_model.spv_rate

    @property
    def dv_variable_rate(self) -> float:
        return self.cost_model.dv_rate


@dataclass(frozen=True)
class Instance:
    network: Network
    depot: int
    pdos: tuple = ()
    spvs: tuple = ()
    dv_spec: DvSpec = DvSpec()
    params: CostParams = CostParams()
    spv_origins_at_depot: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pdos", tuple(self.pdos))
        object.__setattr__(self, "spvs", tuple(self.spvs))
        net = self.network
        if self.depot not in net:
            raise ContractError(f"depot {self.depot} is not a network node")
        seen = set()
        for p in self.pdos:
            if p.id in seen:
                raise ContractError(f"duplicate PDO id {p.id}")
            seen.add(p.id)
            if p.drop_node not in net:
                raise ContractError(f"PDO {p.id}: unknown drop node {p.drop_node}")
            if p.drop_node == self.depot:
                raise ContractError(f"PDO {p.id}: drop node coincides with the depot")
            if not p.earliest_pickup < p.latest_delivery:
                raise ContractError(f"PDO {p.id}: earliest_pickup must precede latest_delivery")
            if p.quantity < 1:
                raise ContractError(f"PDO {p.id}: quantity must be >= 1")
        seen = set()
        for s in self.spvs:
            if s.id in seen:
                raise ContractError(f"duplicate SPV id {s.id}")
            seen.add(s.id)
            for node in (s.origin, s.destination):
                if node not in net:
                    raise ContractError(f"SPV {s.id}: unknown node {node}")
            if not s.earliest_start < s.latest_arrival:
                raise ContractError(f"SPV {s.id}: earliest_start must precede latest_arrival")
            if not 1 <= s.max_stops <= 4:
                raise ContractError(f"SPV {s.id}: max_stops must lie in 1..4")
            if s.detour_willingness < 0:
                raise ContractError(f"SPV {s.id}: detour_willingness must be >= 0")
        if self.dv_spec.max_stops < 1 or self.dv_spec.fixed_cost < 0:
            raise ContractError("invalid DV spec")

    @cached_property
    def pdo_by_id(self) -> dict:
        return {p.id: p for p in self.pdos}

    @cached_property
    def spv_by_id(self) -> dict:
        return {s.id: s for s in self.spvs}

    @property
    def model(self) -> CostModel:
        return self.params.cost_model

    def with_spvs(self, spvs) -> "Instance":
        return replace(self, spvs=tuple(spvs))

    def with_pdos(self, pdos) -> "Instance":
        return replace(self, pdos=tuple(pdos))

    def with_origins_at_depot(self, flag: bool) -> "Instance":
        return replace(self, spv_origins_at_depot=bool(flag))

    def with_depot(self, depot) -> "Instance":
        return replace(self, depot=depot)

    # distance helpers (shortest paths, per vehicle class)
    def miles(self, a, b) -> float:
        return self.network.miles(a, b)

    def time(self, a, b, vehicle_class) -> float:
        return self.model.minutes(self.network.miles(a, b), vehicle_class)

    def cost(self, a, b, vehicle_class) -> float:
        return self.model.dollars(self.network.miles(a, b), vehicle_class)

    def spv_start(self, spv: Spv) -> int:
        """Node the SPV effectively starts from (the depot in origins-at-depot mode)."""
        return self.depot if self.spv_origins_at_depot else spv.origin


# ---------------------------------------------------------------- solution
@dataclass(frozen=True, eq=True)
class SpvPlan:
    spv_id: int
    route: tuple
    served_pdos: frozenset
    stop_times: Mapping = field(default_factory=dict, hash=False)


@dataclass(frozen=True, eq=True)
class DvPlan:
    route: tuple  # depot, stop, ..., depot
    served_pdos: tuple  # per stop: tuple of PDO ids (empty at the depot ends)
    stop_times: tuple  # aligned with route

    @property
    def pdo_ids(self) -> frozenset:
        return frozenset(p for group in self.served_pdos for p in group)

    @property
    def load(self) -> int:
        return len(self.route) - 2


@dataclass
class CostBreakdown:
    spv_detour_cost: float = 0.0
    spv_pdo_compensation: float = 0.0
    dv_variable_cost: float = 0.0
    dv_fixed_cost: float = 0.0
    total: float = 0.0
    spv_vmt: float = 0.0
    dv_vmt: float = 0.0

    @property
    def spv_cost(self) -> float:
        return self.spv_detour_cost + self.spv_pdo_compensation

    @property
    def dv_cost(self) -> float:
        return self.dv_variable_cost + self.dv_fixed_cost


@dataclass
class Solution:
    spv_plans: dict = field(default_factory=dict)
    dv_plans: list = field(default_factory=list)
    cost_breakdown: CostBreakdown | None = None

    def served(self) -> dict:
        """PDO id -> list of vehicle labels serving it (``spv:<id>`` / ``dv:<n>``)."""
        out = {}
        for sid, plan in self.spv_plans.items():
            for p in plan.served_pdos:
                out.setdefault(p, []).append(f"spv:{sid}")
        for n, plan in enumerate(self.dv_plans):
            for p in plan.pdo_ids:
                out.setdefault(p, []).append(f"dv:{n}")
        return out

    @property
    def pdos_by_spv(self) -> int:
        return sum(len(p.served_pdos) for p in self.spv_plans.values())

    @property
    def pdos_by_dv(self) -> int:
        return sum(len(p.pdo_ids) for p in self.dv_plans)


# ------------------------------------------------------------ timing model
def spv_ready_at_depot(instance: Instance, spv: Spv) -> float:
    """Earliest arrival at the depot; ``inf`` if the depot is unreachable."""
    if instance.spv_origins_at_depot:
        return float(spv.earliest_start)
    return spv.earliest_start + instance.time(spv.origin, instance.depot, SPV)


def spv_departure(instance: Instance, spv: Spv, pdo_ids=()) -> float:
    ready = spv_ready_at_depot(instance, spv)
    for pid in pdo_ids:
        ready = max(ready, instance.pdo_by_id[pid].earliest_pickup)
    return ready + instance.params.service_time


def route_offsets(instance: Instance, route, vehicle_class=SPV) -> list:
    """Cumulative travel minutes along an explicit arc path, starting at 0."""
    offsets = [0.0]
    for a, b in zip(route, route[1:]):
        offsets.append(offsets[-1] + arc_metrics(instance.network, (a, b), instance.model, vehicle_class).travel_time)
    return offsets


def spv_stop_times(instance: Instance, spv: Spv, route, pdo_ids) -> dict:
    """Depot departure, drop-node arrivals and destination arrival, keyed by node."""
    dep = spv_departure(instance, spv, pdo_ids)
    offsets = route_offsets(instance, route)
    pos = {v: i for i, v in enumerate(route)}
    times = {route[0]: dep}
    for pid in pdo_ids:
        node = instance.pdo_by_id[pid].drop_node
        times[node] = dep + offsets[pos[node]]
    times[route[-1]] = dep + offsets[-1]
    return times


def spv_plan_feasible(instance: Instance, spv: Spv, route, pdo_ids, offsets=None) -> bool:
    """Joint feasibility of serving ``pdo_ids`` on ``route`` (count, windows, arrival)."""
    if len(pdo_ids) > spv.max_stops:
        return False
    dep = spv_departure(instance, spv, pdo_ids)
    if math.isinf(dep):
        return False
    if offsets is None:
        offsets = route_offsets(instance, route)
    if dep + offsets[-1] > spv.latest_arrival + TIME_TOL:
        return False
    pos = {v: i for i, v in enumerate(route)}
    for pid in pdo_ids:
        p = instance.pdo_by_id[pid]
        i = pos.get(p.drop_node)
        if i is None or dep + offsets[i] > p.latest_delivery + TIME_TOL:
            return False
    return True


def dv_stop_times(instance: Instance, route, pdo_ids) -> tuple:
    """Arrival times along a DV stop sequence (depot departure first)."""
    dep = max((instance.pdo_by_id[p].earliest_pickup for p in pdo_ids), default=0)
    times = [float(dep)]
    for a, b in zip(route, route[1:]):
        times.append(times[-1] + instance.time(a, b, DV))
    return tuple(times)


def make_spv_plan(instance: Instance, spv_id, route, pdo_ids) -> SpvPlan:
    spv = instance.spv_by_id[spv_id]
    ids = frozenset(pdo_ids)
    return SpvPlan(spv_id, tuple(route), ids, spv_stop_times(instance, spv, route, sorted(ids)))


def make_dv_plan(instance: Instance, stops, groups) -> DvPlan:
    """``stops`` excludes the depot; ``groups[i]`` are the PDO ids dropped at ``stops[i]``."""
    route = (instance.depot,) + tuple(stops) + (instance.depot,)
    served = ((),) + tuple(tuple(sorted(g)) for g in groups) + ((),)
    ids = [p for g in groups for p in g]
    return DvPlan(route, served, dv_stop_times(instance, route, ids))


# --------------------------------------------------------------- costing
def _route_cost(instance: Instance, route) -> float:
    arcs = instance.network.arcs
    model = instance.model
    total = 0.0
    for a, b in zip(route, route[1:]):
        arc = arcs.get((a, b))
        if arc is None:
            arc = instance.network.arc(a, b)  # raises UnknownArcError
        total += model.dollars(arc.length, SPV)
    return total


def spv_detour_cost(instance: Instance, spv: Spv, route: Sequence[int]) -> float:
    """Detour compensation: ``c(origin->depot) + c(route) - c(origin->destination)``.

    In origins-at-depot mode the first term is zero and the last is measured
    from the depot.
    """
    if not route or route[0] != instance.depot or route[-1] != spv.destination:
        raise ContractError(f"SPV {spv.id}: route must run from the depot to the SPV destination")
    start = instance.spv_start(spv)
    to_depot = 0.0 if instance.spv_origins_at_depot else instance.cost(spv.origin, instance.depot, SPV)
    return to_depot + _route_cost(instance, route) - instance.cost(start, spv.destination, SPV)


def dv_route_cost(instance: Instance, route) -> float:
    total = 0.0
    for a, b in zip(route, route[1:]):
        total += instance.cost(a, b, DV)
    return total


def dv_route_miles(instance: Instance, route) -> float:
    total = 0.0
    for a, b in zip(route, route[1:]):
        total += instance.miles(a, b)
    return total


def total_objective(instance: Instance, solution: Solution) -> CostBreakdown:
    e = instance.params.per_pdo_compensation
    detour = comp = spv_vmt = 0.0
    for sid in sorted(solution.spv_plans):
        plan = solution.spv_plans[sid]
        spv = instance.spv_by_id[sid]
        detour += spv_detour_cost(instance, spv, plan.route)
        comp += e * len(plan.served_pdos)
        if not instance.spv_origins_at_depot:
            spv_vmt += instance.miles(spv.origin, instance.depot)
        spv_vmt += instance.network.path_miles(plan.route)
    variable = dv_vmt = 0.0
    for plan in solution.dv_plans:
        variable += dv_route_cost(instance, plan.route)
        dv_vmt += dv_route_miles(instance, plan.route)
    fixed = instance.dv_spec.fixed_cost * len(solution.dv_plans)
    total = detour + comp + variable + fixed
    return CostBreakdown(detour, comp, variable, fixed, total, spv_vmt, dv_vmt)


# ------------------------------------------------------------ validation
class Violation(NamedTuple):
    code: str
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code, message):
        self.violations.append(Violation(code, message))

    def codes(self) -> set:
        return {v.code for v in self.violations}

    def __bool__(self):
        return self.ok


def validate_solution(instance: Instance, solution: Solution) -> ValidationReport:
    """Check a solution against every routing, capacity and time-window rule."""
    report = ValidationReport()
    served = solution.served()
    for pid, who in served.items():
        if pid not in instance.pdo_by_id:
            report.add("unknown pdo", f"PDO {pid} does not exist")
        elif len(who) > 1:
            report.add("duplicate service", f"PDO {pid} served by {', '.join(who)}")
    for p in instance.pdos:
        if p.id not in served:
            report.add("unserved", f"PDO {p.id} is not served")

    for sid, plan in solution.spv_plans.items():
        spv = instance.spv_by_id.get(sid)
        if spv is None:
            report.add("unknown spv", f"SPV {sid} does not exist")
            continue
        _check_spv_plan(instance, spv, plan, report)

    limit = instance.dv_spec.fleet_limit
    if limit is not None and len(solution.dv_plans) > limit:
        report.add("fleet limit", f"{len(solution.dv_plans)} DVs used, limit {limit}")
    for n, plan in enumerate(solution.dv_plans):
        _check_dv_plan(instance, n, plan, report)
    return report


def _check_spv_plan(instance, spv, plan, report):
    label = f"SPV {spv.id}"
    route = plan.route
    if not plan.served_pdos:
        report.add("empty spv plan", f"{label} is listed but serves nothing")
    if not route or route[0] != instance.depot or route[-1] != spv.destination:
        report.add("spv endpoints", f"{label}: route must run depot -> destination")
        return
    if not instance.network.is_path(route):
        report.add("disconnected route", f"{label}: consecutive route nodes are not joined by arcs")
        return
    known = [p for p in plan.served_pdos if p in instance.pdo_by_id]
    if len(known) > spv.max_stops:
        report.add("spv capacity", f"{label}: {len(known)} PDOs exceed max_stops {spv.max_stops}")
    ready = spv_ready_at_depot(instance, spv)
    if math.isinf(ready):
        report.add("unreachable depot", f"{label}: depot unreachable from origin")
        return
    times = plan.stop_times
    pos = {v: i for i, v in enumerate(route)}
    needed = [route[0], route[-1]] + [instance.pdo_by_id[p].drop_node for p in known]
    for node in needed:
        if node not in pos:
            report.add("drop off route", f"{label}: node {node} is not on the route")
            return
        if node not in times:
            report.add("missing stop time", f"{label}: no time recorded at node {node}")
            return
    dep = times[route[0]]
    if dep < ready - TIME_TOL:
        report.add("early departure", f"{label}: leaves the depot before reaching it")
    for pid in known:
        p = instance.pdo_by_id[pid]
        if dep < p.earliest_pickup - TIME_TOL:
            report.add("early pickup", f"{label}: PDO {pid} loaded before its release")
        if times[p.drop_node] > p.latest_delivery + TIME_TOL:
            report.add("late delivery", f"{label}: PDO {pid} dropped after its deadline")
    if times[route[-1]] > spv.latest_arrival + TIME_TOL:
        report.add("latest arrival", f"{label}: reaches its destination after latest_arrival")
    offsets = route_offsets(instance, route)
    ordered = sorted((pos[v], v) for v in times if v in pos)
    for (i, a), (j, b) in zip(ordered, ordered[1:]):
        if times[b] <= times[a]:
            report.add("stop order", f"{label}: stop times do not increase at node {b}")
        if times[b] < times[a] + (offsets[j] - offsets[i]) - TIME_TOL:
            report.add("travel time", f"{label}: arrival at {b} faster than travel allows")


def _check_dv_plan(instance, n, plan, report):
    label = f"DV {n}"
    route = plan.route
    depot = instance.depot
    if len(route) < 3 or route[0] != depot or route[-1] != depot:
        report.add("dv endpoints", f"{label}: route must start and end at the depot")
        return
    stops = route[1:-1]
    if depot in stops or len(set(stops)) != len(stops):
        report.add("dv stops", f"{label}: interior stops must be distinct non-depot nodes")
    if len(stops) > instance.dv_spec.max_stops:
        report.add("dv capacity", f"{label}: {len(stops)} stops exceed max_stops {instance.dv_spec.max_stops}")
    if len(plan.served_pdos) != len(route) or len(plan.stop_times) != len(route):
        report.add("dv alignment", f"{label}: served_pdos/stop_times not aligned with route")
        return
    for a, b in zip(route, route[1:]):
        if math.isinf(instance.miles(a, b)):
            report.add("disconnected route", f"{label}: {b} unreachable from {a}")
            return
    times = plan.stop_times
    for i, group in enumerate(plan.served_pdos):
        for pid in group:
            p = instance.pdo_by_id.get(pid)
            if p is None:
                continue
            if p.drop_node != route[i]:
                report.add("drop off route", f"{label}: PDO {pid} listed at the wrong stop")
            if times[0] < p.earliest_pickup - TIME_TOL:
                report.add("early pickup", f"{label}: PDO {pid} loaded before its release")
            if times[i] > p.latest_delivery + TIME_TOL:
                report.add("late delivery", f"{label}: PDO {pid} dropped after its deadline")
    for i in range(1, len(route)):
        if times[i] <= times[i - 1]:
            report.add("stop order", f"{label}: stop times do not increase at position {i}")
        if times[i] < times[i - 1] + instance.time(route[i - 1], route[i], DV) - TIME_TOL:
            report.add("travel time", f"{label}: arrival at position {i} faster than travel allows")
