"""Exhaustive optimum for tiny instances.

Every PDO gets a vehicle label (an SPV or one of up to ``max_dvs`` DVs, DVs
numbered in order of first use so relabelled twins are skipped). An SPV's
PDO set is priced by its cheapest jointly feasible candidate route, with
candidates enumerated without a cap; a DV group is priced by its cheapest
on-time visiting order plus the fixed cost.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .domain import TIME_TOL, Instance, Solution, make_dv_plan, total_objective
from .dvrp import DvMetric, group_locations
from .errors import CapacityError, InfeasibleInstanceError
from .kpaths import generate_candidate_routes
from .switch import SpvPlanner, plans_from_state


@dataclass(frozen=True)
class OracleLimits:
    max_pdos: int = 6
    max_spvs: int = 5
    max_dvs: int = 2
    max_states: int = 2_000_000

    def __post_init__(self):
        if min(self.max_pdos, self.max_spvs, self.max_dvs, self.max_states) < 0:
            raise ValueError("oracle limits must be non-negative")


def _dv_group(instance, metric, pdos):
    """Cheapest feasible DV tour over ``pdos``: (cost, stops, groups) or None."""
    locs = group_locations(instance, pdos)
    if len(locs) > instance.dv_spec.max_stops:
        return None
    depot = instance.depot
    dep = max(loc.release for loc in locs)
    best = None
    for perm in itertools.permutations(locs):
        t = dep
        cost = 0.0
        prev = depot
        ok = True
        for loc in perm:
            t += metric.time(prev, loc.node)
            cost += metric.cost(prev, loc.node)
            if t > loc.deadline + TIME_TOL:
                ok = False
                break
            prev = loc.node
        if not ok:
            continue
        cost += metric.cost(prev, depot)
        key = (cost, tuple(loc.node for loc in perm))
        if best is None or key < best[0]:
            best = (key, perm)
    if best is None:
        return None
    (cost, _), perm = best
    return cost + instance.dv_spec.fixed_cost, [loc.node for loc in perm], [loc.pdos for loc in perm]


def solve_exact_bruteforce(instance: Instance, limits: OracleLimits = OracleLimits()):
    """Global optimum as ``(Solution, cost)``; raises CapacityError beyond ``limits``."""
    pdos = sorted(p.id for p in instance.pdos)
    spvs = sorted(s.id for s in instance.spvs)
    if len(pdos) > limits.max_pdos or len(spvs) > limits.max_spvs:
        raise CapacityError(
            f"oracle limited to {limits.max_pdos} PDOs / {limits.max_spvs} SPVs, got {len(pdos)} / {len(spvs)}")
    n_dvs = limits.max_dvs if instance.dv_spec.fleet_limit is None else min(limits.max_dvs, instance.dv_spec.fleet_limit)
    if (len(spvs) + n_dvs) ** len(pdos) > limits.max_states:
        raise CapacityError("oracle search space exceeds max_states")
    routes = {k: generate_candidate_routes(instance, instance.spv_by_id[k], None) for k in spvs}
    planner = SpvPlanner(instance, routes)
    metric = DvMetric(instance)
    dv_memo = {}

    def dv_cost(group):
        if group not in dv_memo:
            dv_memo[group] = _dv_group(instance, metric, group)
        return dv_memo[group]

    servable = {p: [k for k in spvs if any(p in r.servable for r in routes[k][1:])] for p in pdos}
    best = None
    labels = []  # per PDO: ("s", k) or ("d", n)

    def search(i, used_dvs):
        nonlocal best
        if i == len(pdos):
            spv_sets, dv_sets = {}, {}
            for p, (kind, v) in zip(pdos, labels):
                (spv_sets if kind == "s" else dv_sets).setdefault(v, []).append(p)
            total = 0.0
            choice = {}
            for k, group in spv_sets.items():
                b = planner.best(k, frozenset(group))
                if b is None:
                    return
                total += b[0]
                choice[k] = (b[1], frozenset(group))
            tours = []
            for n in sorted(dv_sets):
                d = dv_cost(tuple(dv_sets[n]))
                if d is None:
                    return
                total += d[0]
                tours.append(d)
            if best is None or total < best[0] - 1e-12:
                best = (total, choice, tours)
            return
        p = pdos[i]
        for k in servable[p]:
            labels.append(("s", k))
            search(i + 1, used_dvs)
            labels.pop()
        for n in range(min(used_dvs + 1, n_dvs)):
            labels.append(("d", n))
            search(i + 1, max(used_dvs, n + 1))
            labels.pop()

    search(0, 0)
    if best is None:
        raise InfeasibleInstanceError("no feasible assignment within the oracle limits", pdos)
    _, choice, tours = best
    sol = Solution(plans_from_state(instance, planner, choice),
                   [make_dv_plan(instance, stops, groups) for _, stops, groups in tours])
    sol.cost_breakdown = total_objective(instance, sol)
    return sol, sol.cost_breakdown.total
