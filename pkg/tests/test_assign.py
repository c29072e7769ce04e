import itertools
import random

import pytest

from crowdship.assign import (AssignmentProblem, AssignmentResult, BendersState, objective_value,
                              solve_assignment, solve_assignment_benders, solve_assignment_exact,
                              solve_assignment_greedy, solve_subproblem)
from crowdship.errors import CapacityError, ContractError
from crowdship.kpaths import CandidateRoute

from builders import random_assignment


def null(k):
    return CandidateRoute(k, 0, (0,), 0.0, 0.0, frozenset(), True)


def route(k, r, cost, servable):
    return CandidateRoute(k, r, (0, 1), 1.0, cost, frozenset(servable))


def problem(spec, pdos, caps, reward=100.0):
    routes = {k: [null(k)] + [route(k, i + 1, c, s) for i, (c, s) in enumerate(rs)] for k, rs in spec.items()}
    return AssignmentProblem(routes, tuple(pdos), reward, caps)


def brute_force(pb):
    best = -float("inf")
    ks = pb.spv_ids
    for combo in itertools.product(*[range(len(pb.routes[k])) for k in ks]):
        best = max(best, solve_subproblem(pb, dict(zip(ks, combo))).value)
    return best


def test_objective_value_examples():
    pb = problem({0: [(0.5, {0}), (1.0, {0, 1})]}, [0, 1], {0: 2})
    one = AssignmentResult({0: 1}, {0: (0, 1), 1: None}, 0.0)
    two = AssignmentResult({0: 2}, {0: (0, 2), 1: (0, 2)}, 0.0)
    none = AssignmentResult({0: 0}, {0: None, 1: None}, 0.0)
    assert objective_value(pb, one) == pytest.approx(99.5)
    assert objective_value(pb, two) == pytest.approx(199.0)
    assert objective_value(pb, none) == 0.0


def test_reward_must_dominate():
    with pytest.raises(ContractError):
        problem({0: [(200.0, {0})]}, [0], {0: 1})


def test_null_route_required():
    with pytest.raises(ContractError):
        AssignmentProblem({0: [route(0, 0, 1.0, {0})]}, (0,), 100.0, {0: 1})


def test_exact_single_option():
    res = solve_assignment_exact(problem({0: [(0.7, {0})]}, [0], {0: 1}))
    assert res.chosen_route == {0: 1} and res.pdo_assignment == {0: (0, 1)}
    assert res.objective == pytest.approx(99.3)


def test_exact_prefers_cheaper_spv():
    res = solve_assignment_exact(problem({0: [(2.0, {0})], 1: [(1.0, {0})]}, [0], {0: 1, 1: 1}))
    assert res.chosen_route == {0: 0, 1: 1}


def test_exact_three_pdos_two_spvs():
    pb = problem({0: [(1.0, {0, 1}), (0.5, {1, 2})], 1: [(2.0, {0, 2})]}, [0, 1, 2], {0: 2, 1: 1})
    res = solve_assignment_exact(pb)
    assert res.objective == pytest.approx(brute_force(pb))
    assert res.matched == 3


def test_exact_capacity_error():
    pb = random_assignment(3, max_pdos=8, max_spvs=5, max_routes=15)
    with pytest.raises(CapacityError):
        solve_assignment_exact(pb, limit=1)


def test_subproblem_examples():
    pb = problem({0: [(1.0, {0, 1})]}, [0, 1], {0: 1})
    empty = solve_subproblem(pb, {})
    assert empty.x == {} and empty.value == 0.0 and set(empty.lambda_p.values()) == {0.0}
    sp = solve_subproblem(pb, {0: 1})
    assert len(sp.x) == 1 and sp.value == pytest.approx(99.0)
    with pytest.raises(ContractError):
        solve_subproblem(pb, {0: 5})


@pytest.mark.parametrize("seed", range(12))
def test_subproblem_duals(seed):
    pb = random_assignment(seed, max_pdos=3, max_spvs=3)
    rng = random.Random(seed)
    z = {k: rng.randrange(len(pb.routes[k])) for k in pb.spv_ids}
    sp = solve_subproblem(pb, z)
    w = pb.reward
    for k in pb.spv_ids:
        for r in range(1, len(pb.routes[k])):
            for p in pb.servable(k, r):
                assert sp.lambda_p[p] + sp.lambda_r[(k, r)] >= w - 1e-9
    # strong duality over the active routes
    dual = sum(sp.lambda_p.values()) + sum(pb.caps[k] * sp.lambda_r[(k, r)] for k, r in z.items() if r)
    spent = sum(pb.cost(k, r) for k, r in z.items() if r)
    assert dual - spent == pytest.approx(sp.value)


def test_benders_trivial_cases():
    single = problem({0: [(0.3, {0})]}, [0], {0: 1})
    assert solve_assignment_benders(single).objective == pytest.approx(solve_assignment_exact(single).objective)
    empty = problem({0: [(0.3, set())], 1: []}, [], {0: 1, 1: 1})
    state = BendersState()
    res = solve_assignment_benders(empty, state=state)
    assert res.objective == 0.0 and res.converged and state.iteration <= 2
    assert set(res.chosen_route.values()) == {0}


@pytest.mark.parametrize("seed", range(40))
def test_backends_match_brute_force(seed):
    pb = random_assignment(seed)
    best = brute_force(pb)
    exact = solve_assignment_exact(pb)
    benders = solve_assignment_benders(pb)
    greedy = solve_assignment_greedy(pb)
    assert exact.objective == pytest.approx(best, abs=1e-6)
    assert benders.converged and benders.objective == pytest.approx(best, abs=1e-6)
    assert greedy.objective <= best + 1e-9
    lbs = [lb for _, lb, _ in benders.bounds]
    ubs = [ub for _, _, ub in benders.bounds]
    assert lbs == sorted(lbs) and ubs == sorted(ubs, reverse=True)
    assert all(lb <= ub + 1e-6 for _, lb, ub in benders.bounds)


@pytest.mark.parametrize("seed", range(20))
def test_result_structure(seed):
    pb = random_assignment(seed)
    for res in (solve_assignment(pb, b) for b in ("exact", "benders", "greedy", "auto")):
        counts = {}
        for p, v in res.pdo_assignment.items():
            if v is None:
                continue
            k, r = v
            assert res.chosen_route[k] == r and p in pb.servable(k, r)
            counts[v] = counts.get(v, 0) + 1
        assert all(n <= pb.caps[k] for (k, _), n in counts.items())
        assert res.objective == pytest.approx(objective_value(pb, res))


def _max_cardinality(pb):
    best = 0
    ks = pb.spv_ids
    for combo in itertools.product(*[range(len(pb.routes[k])) for k in ks]):
        best = max(best, len(solve_subproblem(pb, dict(zip(ks, combo))).x))
    return best


@pytest.mark.parametrize("seed", range(20))
def test_reward_dominance_and_scaling(seed):
    pb = random_assignment(seed)
    res = solve_assignment_exact(pb)
    assert res.matched == _max_cardinality(pb)
    scaled = AssignmentProblem(
        {k: [r if r.is_null_route else CandidateRoute(k, r.index, r.path, r.travel_time, r.detour_cost * 3, r.servable)
             for r in rs] for k, rs in pb.routes.items()},
        pb.pdos, pb.reward, pb.caps)
    assert solve_assignment_exact(scaled).matched == res.matched


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve_assignment(random_assignment(0), "simplex")
