import pytest

from crowdship.dh import DhConfig, incumbent_gap, solve_dh, spv_order
from crowdship.domain import DvSpec, total_objective, validate_solution
from crowdship.dvrp import insertion_mvrp
from crowdship.errors import ContractError, InfeasibleInstanceError
from crowdship.oracle import solve_exact_bruteforce
from crowdship.scenario import GenSpec, generate_instance

from builders import instance, line, pdo, tiny


@pytest.mark.parametrize("dh, oracle, gap", [(151.5, 148.0, 0.0236), (165.3, 159.8, 0.0344), (90.0, 90.0, 0.0)])
def test_incumbent_gap(dh, oracle, gap):
    assert incumbent_gap(dh, oracle) == pytest.approx(gap, abs=5e-5)


def test_incumbent_gap_needs_positive_oracle():
    with pytest.raises(ContractError):
        incumbent_gap(1.0, 0.0)


def test_config_validation():
    with pytest.raises(ContractError):
        DhConfig(batch_size=0)
    with pytest.raises(ContractError):
        DhConfig(assignment_backend="gurobi")


def test_zero_pdos():
    sol, trace = solve_dh(instance(line(3)))
    assert sol.cost_breakdown.total == 0.0 and trace.incumbent == [0.0]


def test_zero_spvs_is_pure_dv():
    inst = generate_instance(GenSpec(rows=4, cols=4, pdos=8, spvs=0, seed=2))
    sol, trace = solve_dh(inst)
    routes = insertion_mvrp(inst, [p.id for p in inst.pdos])
    assert not sol.spv_plans and len(sol.dv_plans) == len(routes)
    assert [list(p.route) for p in sol.dv_plans] == [r.stops for r in routes]
    cb = total_objective(inst, sol)
    assert cb.total == pytest.approx(cb.dv_variable_cost + inst.dv_spec.fixed_cost * len(routes))


@pytest.mark.parametrize("seed", range(10))
def test_close_to_oracle_and_feasible(seed):
    inst = tiny(seed)
    sol, trace = solve_dh(inst)
    _, best = solve_exact_bruteforce(inst)
    assert validate_solution(inst, sol).ok
    assert sol.cost_breakdown.total >= best - 1e-9
    assert trace.incumbent == sorted(trace.incumbent, reverse=True)


def test_spv_order_is_stable_under_subsets():
    inst = tiny(0, pdos=3, spvs=5)
    full = [s.id for s in spv_order(inst, 7)]
    sub = inst.with_spvs(tuple(s for s in inst.spvs if s.id % 2 == 0))
    assert [s.id for s in spv_order(sub, 7)] == [k for k in full if k % 2 == 0]
    assert [s.id for s in spv_order(inst, 7)] == full


def test_batches_and_trace():
    inst = generate_instance(GenSpec(rows=4, cols=4, pdos=10, spvs=25, seed=5))
    sol, trace = solve_dh(inst, DhConfig(batch_size=10))
    assert [it.active_spvs for it in trace.iterations] == [0, 10, 20, 25]
    assert len(trace.incumbent) == 4
    assert trace.incumbent[-1] == pytest.approx(sol.cost_breakdown.total)
    assert min(it.total_cost for it in trace.iterations) == pytest.approx(sol.cost_breakdown.total)
    for it in trace.iterations:
        assert 0 <= it.matched_initial <= 10 and 0 <= it.matched_final <= 10
        assert all(s <= 1e-9 for s in it.remaining_savings)
    assert trace.switch_log == [e for it in trace.iterations for e in it.switches]


@pytest.mark.parametrize("backend", ["exact", "benders", "greedy", "auto"])
def test_backends_produce_valid_solutions(backend):
    inst = generate_instance(GenSpec(rows=4, cols=4, pdos=8, spvs=6, seed=9))
    sol, _ = solve_dh(inst, DhConfig(assignment_backend=backend))
    assert validate_solution(inst, sol).ok


def test_deterministic_for_seed():
    inst = generate_instance(GenSpec(rows=4, cols=4, pdos=10, spvs=30, seed=3))
    a, _ = solve_dh(inst, DhConfig(batch_size=7, seed=4))
    b, _ = solve_dh(inst, DhConfig(batch_size=7, seed=4))
    assert a.cost_breakdown == b.cost_breakdown


def test_more_spvs_never_worse_in_trace():
    inst = generate_instance(GenSpec(rows=5, cols=5, pdos=15, spvs=40, seed=8))
    _, trace = solve_dh(inst, DhConfig(batch_size=10))
    assert all(b <= a for a, b in zip(trace.incumbent, trace.incumbent[1:]))


@pytest.mark.parametrize("seed", range(3))
def test_adding_spvs_never_worsens_incumbent(seed):
    from crowdship.cli import limit_spvs
    inst = generate_instance(GenSpec(rows=5, cols=5, pdos=20, spvs=60, seed=7 + seed))
    config = DhConfig(batch_size=20)
    costs = [solve_dh(limit_spvs(inst, m, config.seed), config)[0].cost_breakdown.total for m in (0, 20, 40, 60)]
    assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))


def test_undeliverable_pdo_propagates():
    inst = instance(line(4), pdos=[pdo(0, 3, early=0, late=2)], dv_spec=DvSpec())
    with pytest.raises(InfeasibleInstanceError) as err:
        solve_dh(inst)
    assert list(err.value.culprits) == [0]
