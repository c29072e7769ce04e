"""Decomposition heuristic: batched SPV growth, assignment, switching, DV routing.

SPVs are ordered once by a seeded key and admitted in batches; every
iteration solves the problem for the SPVs admitted so far and the cheapest
complete solution seen is kept. The first iteration admits no SPVs, so the
pure dedicated-vehicle plan is always a candidate.
"""
from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field

from .assign import AssignmentProblem, solve_assignment
from .domain import MONEY_TOL, Instance, Solution, total_objective
from .dvrp import DvMetric, build_single_route, insertion_mvrp
from .errors import ContractError, InfeasibleInstanceError
from .kpaths import DEFAULT_MAX_ROUTES, generate_candidate_routes
from .switch import SpvPlanner, SwitchState, plans_from_state, remaining_savings, switch_loop

log = logging.getLogger(__name__)

IMPROVE_TOL = MONEY_TOL


@dataclass(frozen=True)
class DhConfig:
    batch_size: int = 100
    assignment_backend: str = "auto"  # exact | benders | greedy | auto
    epsilon: float = 1e-6
    seed: int = 0
    max_routes_per_spv: int | None = DEFAULT_MAX_ROUTES

    def __post_init__(self):
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.assignment_backend not in ("exact", "benders", "greedy", "auto"):
            raise ContractError(f"unknown assignment backend {self.assignment_backend!r}")


@dataclass
class IterationRecord:
    active_spvs: int
    matched_initial: int
    matched_final: int
    dv_count: int
    total_cost: float
    wall_seconds: float
    switches: list = field(default_factory=list)
    remaining_savings: list = field(default_factory=list)


@dataclass
class DhTrace:
    iterations: list = field(default_factory=list)
    incumbent: list = field(default_factory=list)  # best cost after each iteration

    @property
    def switch_log(self) -> list:
        return [entry for it in self.iterations for entry in it.switches]


def spv_order(instance: Instance, seed) -> list:
    """Seeded shuffle keyed per SPV id, so any subset keeps its relative order."""
    return sorted(instance.spvs, key=lambda s: (random.Random(f"{seed}:{s.id}").random(), s.id))


def incumbent_gap(dh_cost: float, oracle_cost: float) -> float:
    if not oracle_cost > 0:
        raise ContractError("oracle cost must be positive")
    return (dh_cost - oracle_cost) / oracle_cost


def _repair(planner: SpvPlanner, k, pdos, instance):
    """Largest jointly feasible subset, shedding the latest-released PDO first."""
    pdos = set(pdos)
    dropped = []
    while pdos and planner.best(k, pdos) is None:
        worst = max(pdos, key=lambda p: (instance.pdo_by_id[p].earliest_pickup, p))
        pdos.discard(worst)
        dropped.append(worst)
    best = planner.best(k, pdos)
    return (best[1], frozenset(pdos)), dropped


def _assign(instance, planner, routes, pdo_ids, config):
    """Solve the assignment and repair joint infeasibility. Returns (plans, unmatched)."""
    if not routes or not pdo_ids:
        return {k: (0, frozenset()) for k in routes}, set(pdo_ids)
    problem = AssignmentProblem.from_instance(instance, routes, pdo_ids)
    result = solve_assignment(problem, config.assignment_backend, config.epsilon)
    plans = {}
    unmatched = {p for p, v in result.pdo_assignment.items() if v is None}
    for k in sorted(routes):
        plan, dropped = _repair(planner, k, result.pdos_of(k), instance)
        plans[k] = plan
        unmatched.update(dropped)
    return plans, unmatched


def _spv_cost(planner, plans):
    return sum(planner.plan_cost(k, r, pdos) for k, (r, pdos) in plans.items() if r)


def solve_dh(instance: Instance, config: DhConfig = DhConfig()):
    """Run the heuristic; returns ``(Solution, DhTrace)``."""
    trace = DhTrace()
    all_pdos = sorted(p.id for p in instance.pdos)
    if not all_pdos:
        sol = Solution({}, [])
        sol.cost_breakdown = total_objective(instance, sol)
        trace.incumbent.append(0.0)
        return sol, trace
    order = spv_order(instance, config.seed)
    n = len(order)
    cuts = [0] + list(range(config.batch_size, n, config.batch_size)) + ([n] if n else [])
    metric = DvMetric(instance)
    routes_memo = {}
    planner = SpvPlanner(instance, routes_memo)
    best = None
    failure = None
    for m in cuts:
        t0 = time.perf_counter()
        active = order[:m]
        for s in active:
            if s.id not in routes_memo:
                routes_memo[s.id] = generate_candidate_routes(instance, s, config.max_routes_per_spv)
        routes = {s.id: routes_memo[s.id] for s in active}
        try:
            sol, record = _iteration(instance, config, planner, routes, all_pdos, metric)
        except InfeasibleInstanceError as exc:
            failure = exc
            log.debug("iteration with %d SPVs infeasible: %s", m, exc)
            trace.incumbent.append(best[0] if best else float("inf"))
            continue
        record.active_spvs = m
        record.wall_seconds = time.perf_counter() - t0
        trace.iterations.append(record)
        if best is None or sol.cost_breakdown.total < best[0] - IMPROVE_TOL:
            best = (sol.cost_breakdown.total, sol)
        trace.incumbent.append(best[0])
        log.debug("iteration %d SPVs: cost %.4f (best %.4f)", m, record.total_cost, best[0])
    if best is None:
        raise failure
    return best[1], trace


def _iteration(instance, config, planner, routes, all_pdos, metric):
    # Step 2: match PDOs to SPV routes
    plans, unmatched = _assign(instance, planner, routes, all_pdos, config)
    matched_initial = len(all_pdos) - len(unmatched)
    # Step 3: one uncapped DV route as the switching baseline
    single = build_single_route(instance, unmatched, metric)
    # Step 4: switch PDOs onto it while that saves money
    state = SwitchState(dict(plans), single)
    switches = switch_loop(instance, state, planner, metric)
    leftovers = remaining_savings(instance, state, planner, metric)
    # Step 5: final DV routes, then rematch the PDOs still on SPVs
    dv_pdos = [p for p in all_pdos if p in unmatched or p in state.switched]
    dv_routes = insertion_mvrp(instance, dv_pdos, metric)
    spv_pdos = sorted(p for _, pdos in state.spv_plans.values() for p in pdos)
    current = state.spv_plans
    if spv_pdos:
        rematched, lost = _assign(instance, planner, routes, spv_pdos, config)
        if not lost and _spv_cost(planner, rematched) <= _spv_cost(planner, current) + IMPROVE_TOL:
            current = rematched
    sol = Solution(plans_from_state(instance, planner, current), [r.to_plan(instance) for r in dv_routes])
    sol.cost_breakdown = total_objective(instance, sol)
    record = IterationRecord(
        0, matched_initial, sol.pdos_by_spv, len(sol.dv_plans), sol.cost_breakdown.total, 0.0, switches, leftovers)
    return sol, record
