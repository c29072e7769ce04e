"""Synthetic instances and their on-disk form.

Coordinates live on an integer grid and arc lengths are rounded to 1e-3
miles, so a given seed yields the same instance on every platform.
"""
from __future__ import annotations

import json
import math
import os
import random
import tempfile
from dataclasses import dataclass, field

from .domain import CostParams, DvSpec, Instance, Pdo, Solution, Spv
from .errors import ContractError, GenerationError, ParseError
from .net_graph import SPV, Arc, CostModel, Network

SCHEMA = "crowdship-instance/1"
SOLUTION_SCHEMA = "crowdship-solution/1"
DAY_START = 480  # 8:00 am
LATEST_MENU = (720, 960, 1200)  # noon, 4 pm, 8 pm
PLANAR_RESOLUTION = 1000  # integer coordinate grid per side


@dataclass(frozen=True)
class GenSpec:
    kind: str = "grid"  # grid | planar
    rows: int = 10
    cols: int = 10
    nodes: int = 100  # planar only
    area: float = 32.0  # square miles
    depot: str = "boundary"  # boundary | center | node:<id>
    pdos: int = 50
    latest_menu: tuple = LATEST_MENU
    day_start: int = DAY_START
    spvs: int = 100
    spv_window_span: int = 600  # earliest starts fall in [day_start, day_start + span]
    detour_willingness: float = 30.0
    max_stops: tuple = (1, 4)
    seed: int = 0
    cost_model: CostModel = field(default_factory=CostModel)
    per_pdo_compensation: float = 1.5
    service_time: float = 10.0
    dv_fixed_cost: float = 120.0
    dv_max_stops: int = 60

    def __post_init__(self):
        if self.kind not in ("grid", "planar"):
            raise GenerationError(f"unknown network kind {self.kind!r}")
        if self.node_count < 2:
            raise GenerationError("a network needs at least 2 nodes")
        if min(self.pdos, self.spvs, self.spv_window_span) < 0:
            raise GenerationError("counts must be non-negative")
        if not self.area > 0:
            raise GenerationError("area must be positive")
        if not self.latest_menu or min(self.latest_menu) <= self.day_start:
            raise GenerationError("latest-delivery choices must follow the day start")
        lo, hi = self.max_stops
        if not 1 <= lo <= hi <= 4:
            raise GenerationError("max_stops range must lie within 1..4")

    @property
    def node_count(self) -> int:
        return self.rows * self.cols if self.kind == "grid" else self.nodes


# ------------------------------------------------------------- networks
def _grid(spec: GenSpec):
    rows, cols = spec.rows, spec.cols
    step = math.sqrt(spec.area) / max(rows - 1, cols - 1, 1)
    length = round(step, 3)
    coords = {r * cols + c: (c, r) for r in range(rows) for c in range(cols)}
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, length))
            if r + 1 < rows:
                edges.append((v, v + cols, length))
    return Network.from_undirected(coords, edges, coords)


def _planar(spec: GenSpec, rng: random.Random):
    from scipy.spatial import Delaunay

    n = spec.nodes
    side = PLANAR_RESOLUTION
    pts = set()
    while len(pts) < n:
        pts.add((rng.randrange(side + 1), rng.randrange(side + 1)))
    pts = sorted(pts)
    coords = {i: p for i, p in enumerate(pts)}
    scale = math.sqrt(spec.area) / side
    if n == 2:
        pairs = {(0, 1)}
    else:
        try:
            tri = Delaunay(pts)
            pairs = set()
            for simplex in tri.simplices:
                for a, b in ((0, 1), (1, 2), (0, 2)):
                    u, v = sorted((int(simplex[a]), int(simplex[b])))
                    pairs.add((u, v))
        except Exception:  # collinear points: chain them
            pairs = {(i, i + 1) for i in range(n - 1)}
    # Gabriel filter: drop an edge when another point sits inside its diametral circle
    keep = []
    for u, v in sorted(pairs):
        (x1, y1), (x2, y2) = pts[u], pts[v]
        mx2, my2 = x1 + x2, y1 + y2
        r2 = (x1 - x2) ** 2 + (y1 - y2) ** 2
        blocked = any((2 * x - mx2) ** 2 + (2 * y - my2) ** 2 < r2 for i, (x, y) in enumerate(pts) if i not in (u, v))
        if not blocked:
            keep.append((u, v))
    edges = [(u, v, max(round(math.dist(pts[u], pts[v]) * scale, 3), 0.001)) for u, v in keep]
    return Network.from_undirected(coords, edges, coords)


def depot_candidates(network: Network) -> dict:
    """``boundary``: middle of the bottom edge; ``center``: nearest to the centroid."""
    xs = [network.coords[v][0] for v in network.nodes]
    ys = [network.coords[v][1] for v in network.nodes]
    cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
    low = min(ys)
    boundary = min((v for v in network.nodes if network.coords[v][1] == low),
                   key=lambda v: (abs(network.coords[v][0] - cx), v))
    center = min(network.nodes, key=lambda v: ((network.coords[v][0] - cx) ** 2 + (network.coords[v][1] - cy) ** 2, v))
    return {"boundary": boundary, "center": center}


def resolve_depot(network: Network, choice: str) -> int:
    if choice.startswith("node:"):
        try:
            node = int(choice[5:])
        except ValueError:
            raise GenerationError(f"bad depot {choice!r}") from None
        if node not in network:
            raise GenerationError(f"depot node {node} is not in the network")
        return node
    cands = depot_candidates(network)
    if choice not in cands:
        raise GenerationError(f"depot must be boundary, center or node:<id>, got {choice!r}")
    return cands[choice]


def generate_instance(spec: GenSpec) -> Instance:
    rng = random.Random(spec.seed)
    network = _grid(spec) if spec.kind == "grid" else _planar(spec, rng)
    depot = resolve_depot(network, spec.depot)
    excluded = {depot, *depot_candidates(network).values()}
    drop_nodes = [v for v in network.nodes if v not in excluded]
    if spec.pdos and not drop_nodes:
        raise GenerationError("no non-depot node available for PDO drops")
    pdos = []
    for i in range(spec.pdos):
        node = rng.choice(drop_nodes)
        latest = rng.choice(list(spec.latest_menu))
        pdos.append(Pdo(i, node, spec.day_start, latest, rng.randint(1, 3)))
    model = spec.cost_model
    spvs = []
    for i in range(spec.spvs):
        o, d = rng.sample(network.nodes, 2)
        start = spec.day_start + rng.randint(0, spec.spv_window_span)
        direct = model.minutes(network.miles(o, d), SPV)
        if math.isinf(direct):
            raise GenerationError(f"SPV {i}: destination unreachable from origin")
        latest = start + math.ceil(direct) + math.ceil(spec.detour_willingness)
        spvs.append(Spv(i, o, d, start, latest, rng.randint(*spec.max_stops), spec.detour_willingness))
    params = CostParams(spec.per_pdo_compensation, spec.service_time, model)
    return Instance(network, depot, tuple(pdos), tuple(spvs), DvSpec(spec.dv_max_stops, spec.dv_fixed_cost), params)


# -------------------------------------------------------- serialization
def instance_to_dict(instance: Instance) -> dict:
    net = instance.network
    m = instance.model
    return {
        "schema": SCHEMA,
        "network": {
            "nodes": list(net.nodes),
            "coords": [[v, *net.coords[v]] for v in net.nodes if v in net.coords],
            "arcs": [[t, h, a.length] for (t, h), a in sorted(net.arcs.items())],
        },
        "depot": instance.depot,
        "spv_origins_at_depot": instance.spv_origins_at_depot,
        "params": {
            "per_pdo_compensation": instance.params.per_pdo_compensation,
            "service_time": instance.params.service_time,
            "spv_speed": m.spv_speed, "dv_speed": m.dv_speed,
            "spv_rate": m.spv_rate, "dv_rate": m.dv_rate,
        },
        "dv": {"max_stops": instance.dv_spec.max_stops, "fixed_cost": instance.dv_spec.fixed_cost,
               "fleet_limit": instance.dv_spec.fleet_limit},
        "pdos": [{"id": p.id, "drop_node": p.drop_node, "earliest_pickup": p.earliest_pickup,
                  "latest_delivery": p.latest_delivery, "quantity": p.quantity} for p in instance.pdos],
        "spvs": [{"id": s.id, "origin": s.origin, "destination": s.destination,
                  "earliest_start": s.earliest_start, "latest_arrival": s.latest_arrival,
                  "max_stops": s.max_stops, "detour_willingness": s.detour_willingness} for s in instance.spvs],
    }


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1, sort_keys=True) + "\n"


def _get(obj, key, where):
    try:
        return obj[key]
    except (KeyError, TypeError, IndexError):
        raise ParseError(f"{where}: missing field {key!r}") from None


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise ParseError(f"schema: expected {SCHEMA!r}")
    net_doc = _get(doc, "network", "document")
    nodes = _get(net_doc, "nodes", "network")
    arcs = []
    for i, row in enumerate(_get(net_doc, "arcs", "network")):
        if not isinstance(row, list) or len(row) != 3:
            raise ParseError(f"network.arcs[{i}]: expected [tail, head, length]")
        t, h, length = row
        if not (isinstance(length, (int, float)) and length > 0):
            raise ParseError(f"network.arcs[{i}] ({t}, {h}): length must be positive")
        arcs.append(Arc(t, h, float(length)))
    coords = {}
    for row in net_doc.get("coords", []):
        coords[row[0]] = tuple(row[1:])
    try:
        network = Network(nodes, arcs, coords)
    except ContractError as exc:
        raise ParseError(f"network: {exc}") from None
    pdos = []
    for i, p in enumerate(_get(doc, "pdos", "document")):
        where = f"PDO {p.get('id', f'#{i}') if isinstance(p, dict) else f'#{i}'}"
        pdos.append(Pdo(_get(p, "id", where), _get(p, "drop_node", where), _get(p, "earliest_pickup", where),
                        _get(p, "latest_delivery", where), p.get("quantity", 1)))
    spvs = []
    for i, s in enumerate(_get(doc, "spvs", "document")):
        where = f"SPV {s.get('id', f'#{i}') if isinstance(s, dict) else f'#{i}'}"
        spvs.append(Spv(*(_get(s, k, where) for k in (
            "id", "origin", "destination", "earliest_start", "latest_arrival", "max_stops", "detour_willingness"))))
    prm = _get(doc, "params", "document")
    dv = _get(doc, "dv", "document")
    try:
        model = CostModel(*(_get(prm, k, "params") for k in ("spv_speed", "dv_speed", "spv_rate", "dv_rate")))
        params = CostParams(_get(prm, "per_pdo_compensation", "params"), _get(prm, "service_time", "params"), model)
        return Instance(network, _get(doc, "depot", "document"), tuple(pdos), tuple(spvs),
                        DvSpec(_get(dv, "max_stops", "dv"), _get(dv, "fixed_cost", "dv"), dv.get("fleet_limit")),
                        params, bool(doc.get("spv_origins_at_depot", False)))
    except ContractError as exc:
        raise ParseError(str(exc)) from None


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(doc)


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_instance(instance: Instance, path) -> None:
    _atomic_write(path, dumps_instance(instance))


def load_instance(path) -> Instance:
    with open(path) as fh:
        text = fh.read()
    try:
        return loads_instance(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def solution_to_dict(solution: Solution) -> dict:
    cb = solution.cost_breakdown
    return {
        "schema": SOLUTION_SCHEMA,
        "spv_plans": [{"spv_id": p.spv_id, "route": list(p.route), "served_pdos": sorted(p.served_pdos),
                       "stop_times": [[n, t] for n, t in p.stop_times.items()]}
                      for _, p in sorted(solution.spv_plans.items())],
        "dv_plans": [{"route": list(p.route), "served_pdos": [list(g) for g in p.served_pdos],
                      "stop_times": list(p.stop_times)} for p in solution.dv_plans],
        "cost_breakdown": None if cb is None else {
            "spv_detour_cost": cb.spv_detour_cost, "spv_pdo_compensation": cb.spv_pdo_compensation,
            "dv_variable_cost": cb.dv_variable_cost, "dv_fixed_cost": cb.dv_fixed_cost,
            "total": cb.total, "spv_vmt": cb.spv_vmt, "dv_vmt": cb.dv_vmt},
    }


def save_solution(solution: Solution, path) -> None:
    _atomic_write(path, json.dumps(solution_to_dict(solution), indent=1, sort_keys=True) + "\n")
