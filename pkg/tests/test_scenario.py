import json

import pytest

from crowdship.errors import GenerationError, ParseError
from crowdship.scenario import (SCHEMA, GenSpec, depot_candidates, dumps_instance, generate_instance, instance_to_dict,
                                load_instance, loads_instance, resolve_depot, save_instance, save_solution)
from crowdship.dh import solve_dh

from builders import tiny


def test_deterministic_bytes():
    spec = GenSpec(rows=4, cols=5, pdos=12, spvs=20, seed=3)
    assert dumps_instance(generate_instance(spec)) == dumps_instance(generate_instance(spec))
    other = GenSpec(rows=4, cols=5, pdos=12, spvs=20, seed=4)
    assert dumps_instance(generate_instance(spec)) != dumps_instance(generate_instance(other))


def test_empty_pdos():
    assert generate_instance(GenSpec(rows=3, cols=3, pdos=0, spvs=2)).pdos == ()


def test_cardinality_large():
    inst = generate_instance(GenSpec(rows=10, cols=10, pdos=200, spvs=1200, seed=7, depot="center"))
    assert len(inst.pdos) == 200 and len(inst.spvs) == 1200 and len(inst.network.nodes) == 100


def test_generated_fields_follow_defaults():
    spec = GenSpec(rows=5, cols=5, pdos=40, spvs=40, seed=1)
    inst = generate_instance(spec)
    m = inst.model
    assert (m.spv_speed, m.dv_speed, m.spv_rate, m.dv_rate) == (40.0, 30.0, 0.56, 1.5)
    assert (inst.params.per_pdo_compensation, inst.params.service_time) == (1.5, 10.0)
    assert (inst.dv_spec.fixed_cost, inst.dv_spec.max_stops) == (120.0, 60)
    excluded = {inst.depot, *depot_candidates(inst.network).values()}
    for p in inst.pdos:
        assert p.earliest_pickup == 480 and p.latest_delivery in (720, 960, 1200)
        assert p.drop_node not in excluded
    for s in inst.spvs:
        assert s.origin != s.destination and 1 <= s.max_stops <= 4
        assert 480 <= s.earliest_start <= 1080


def test_grid_lengths_fixed_point():
    inst = generate_instance(GenSpec(rows=4, cols=6, pdos=1, spvs=0))
    for arc in inst.network.arcs.values():
        assert round(arc.length, 3) == arc.length
    assert all(isinstance(c, int) for xy in inst.network.coords.values() for c in xy)


def test_planar_network():
    inst = generate_instance(GenSpec(kind="planar", nodes=40, pdos=10, spvs=10, seed=2))
    assert len(inst.network.nodes) == 40
    net = inst.network
    assert all((h, t) in net.arcs for (t, h) in net.arcs)
    # connected: every node reachable from the depot
    assert all(net.miles(inst.depot, v) < float("inf") for v in net.nodes)


@pytest.mark.parametrize("kw", [dict(rows=1, cols=1), dict(pdos=-1), dict(kind="hex"), dict(area=0.0),
                                dict(latest_menu=(400,)), dict(max_stops=(0, 2))])
def test_invalid_specs(kw):
    with pytest.raises(GenerationError):
        GenSpec(**kw)


def test_two_node_network_drops_off_the_depot():
    inst = generate_instance(GenSpec(rows=1, cols=2, pdos=3, spvs=1))
    assert {p.drop_node for p in inst.pdos} == {1} and inst.depot == 0


def test_depot_placement():
    net = generate_instance(GenSpec(rows=5, cols=5, pdos=0, spvs=0)).network
    cands = depot_candidates(net)
    assert net.coords[cands["boundary"]][1] == min(y for _, y in net.coords.values())
    assert cands["center"] == 12
    assert resolve_depot(net, "node:7") == 7
    for bad in ("node:99", "node:x", "middle"):
        with pytest.raises(GenerationError):
            resolve_depot(net, bad)


@pytest.mark.parametrize("seed", range(4))
def test_round_trip(tmp_path, seed):
    inst = tiny(seed).with_origins_at_depot(bool(seed % 2))
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert instance_to_dict(back) == instance_to_dict(inst)
    assert back.pdos == inst.pdos and back.spvs == inst.spvs and back.dv_spec == inst.dv_spec
    assert back.params == inst.params and back.spv_origins_at_depot == inst.spv_origins_at_depot


def _doc():
    return instance_to_dict(tiny(0))


def test_negative_length_rejected():
    doc = _doc()
    doc["network"]["arcs"][0][2] = -1.0
    with pytest.raises(ParseError, match="length must be positive"):
        loads_instance(json.dumps(doc))


def test_unknown_node_names_pdo():
    doc = _doc()
    doc["pdos"][2]["drop_node"] = 999
    with pytest.raises(ParseError, match="PDO 2"):
        loads_instance(json.dumps(doc))


def test_missing_field_named():
    doc = _doc()
    del doc["spvs"][1]["origin"]
    with pytest.raises(ParseError, match="SPV 1.*origin"):
        loads_instance(json.dumps(doc))


def test_syntax_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": "%s",\n "depot": }' % SCHEMA)
    with pytest.raises(ParseError, match=r"line 2, column"):
        load_instance(path)


def test_wrong_schema():
    with pytest.raises(ParseError, match="schema"):
        loads_instance(json.dumps({"schema": "other"}))


def test_save_solution(tmp_path):
    inst = tiny(1)
    sol, _ = solve_dh(inst)
    path = tmp_path / "sol.json"
    save_solution(sol, path)
    doc = json.loads(path.read_text())
    assert doc["cost_breakdown"]["total"] == pytest.approx(sol.cost_breakdown.total)
    assert sum(len(p["served_pdos"]) for p in doc["spv_plans"]) == sol.pdos_by_spv
    assert not list(tmp_path.glob("*.tmp"))
