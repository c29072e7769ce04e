"""Small instance and problem factories shared by the tests."""
import random

from crowdship.assign import AssignmentProblem
from crowdship.domain import CostParams, DvSpec, Instance, Pdo, Spv
from crowdship.kpaths import CandidateRoute
from crowdship.net_graph import Arc, CostModel, Network
from crowdship.scenario import GenSpec, generate_instance

# 60 mph for both classes: minutes == miles, handy for hand-checked numbers
UNIT = CostModel(spv_speed=60.0, dv_speed=60.0, spv_rate=1.0, dv_rate=1.0)


def diamond():
    """s=0, a=1, b=2, t=3 with s->a 2, a->t 2, s->b 3, b->t 3, a->b 1."""
    arcs = [Arc(0, 1, 2.0), Arc(1, 3, 2.0), Arc(0, 2, 3.0), Arc(2, 3, 3.0), Arc(1, 2, 1.0)]
    return Network(range(4), arcs)


def line(n, length=1.0):
    return Network.from_undirected(range(n), [(i, i + 1, length) for i in range(n - 1)])


def random_digraph(rng, n, max_out=4, lo=0.1, hi=3.0):
    arcs = []
    for u in range(n):
        heads = rng.sample([v for v in range(n) if v != u], min(rng.randint(1, max_out), n - 1))
        for v in heads:
            arcs.append(Arc(u, v, round(rng.uniform(lo, hi), 3)))
    return Network(range(n), arcs)


def instance(network, depot=0, pdos=(), spvs=(), model=UNIT, **kw):
    params = CostParams(kw.pop("e", 1.5), kw.pop("service_time", 10.0), model)
    dv = kw.pop("dv_spec", DvSpec())
    return Instance(network, depot, tuple(pdos), tuple(spvs), dv, params, **kw)


def pdo(i, node, early=0, late=10_000):
    return Pdo(i, node, early, late)


def spv(i, origin, dest, start=0, late=10_000, stops=4, willing=1_000.0):
    return Spv(i, origin, dest, start, late, stops, willing)


def tiny(seed, pdos=5, spvs=4):
    return generate_instance(GenSpec(rows=3, cols=5, pdos=pdos, spvs=spvs, seed=seed))


def random_assignment(seed, max_pdos=8, max_spvs=5, max_routes=15, reward=100.0):
    rng = random.Random(seed)
    pdos = list(range(rng.randint(1, max_pdos)))
    routes = {}
    total = 0
    for k in range(rng.randint(1, max_spvs)):
        rs = [CandidateRoute(k, 0, (0,), 0.0, 0.0, frozenset(), True)]
        for _ in range(rng.randint(0, 4)):
            if total >= max_routes:
                break
            total += 1
            servable = frozenset(p for p in pdos if rng.random() < 0.4)
            rs.append(CandidateRoute(k, len(rs), (0, 1), 1.0, round(rng.uniform(0, 5), 2), servable))
        routes[k] = rs
    caps = {k: rng.randint(1, 4) for k in routes}
    return AssignmentProblem(routes, tuple(pdos), reward, caps)
