"""Command-line runner: ``crowdship generate | solve | sweep``.

Data goes to stdout or the named files; diagnostics go to stderr.
Exit codes: 0 ok, 2 usage, 3 infeasible instance, 4 invalid solution, 1 other errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .dh import DhConfig, incumbent_gap, solve_dh, spv_order
from .domain import Instance, validate_solution
from .errors import CapacityError, CrowdshipError, InfeasibleInstanceError
from .kpaths import DEFAULT_MAX_ROUTES, spv_has_feasible_budget
from .net_graph import SPV
from .scenario import GenSpec, generate_instance, load_instance, resolve_depot, save_instance, save_solution

METRICS_VERSION = "# crowdship-metrics/1"
COLUMNS = ["spv_count", "pdos_by_spv", "pdos_by_dv", "spv_cost", "dv_cost", "total",
           "spv_vmt", "dv_vmt", "dv_count", "wall_seconds"]
HISTOGRAM_BIN = 5  # minutes

log = logging.getLogger("crowdship")


class InvalidSolution(CrowdshipError):
    pass


def default_seed() -> int:
    return int(os.environ.get("CROWDSHIP_SEED", "0"))


def _grid_dims(text):
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}") from None


def _int_list(text):
    if ":" in text:
        lo, hi, step = (int(x) for x in text.split(":"))
        return list(range(lo, hi + 1, step))
    return [int(x) for x in text.split(",") if x]


def _float_list(text):
    return [float(x) for x in text.split(",") if x]


def _str_list(text):
    return [x for x in text.split(",") if x]


# ---------------------------------------------------------------- helpers
def with_detour(instance: Instance, willingness: float) -> Instance:
    """Same SPVs with a new detour willingness; latest arrivals widen to match."""
    spvs = []
    for s in instance.spvs:
        direct = instance.time(s.origin, s.destination, SPV)
        latest = s.earliest_start + math.ceil(direct) + math.ceil(willingness)
        spvs.append(replace(s, detour_willingness=willingness, latest_arrival=latest))
    return instance.with_spvs(spvs)


def limit_spvs(instance: Instance, count: int | None, seed) -> Instance:
    if count is None or count >= len(instance.spvs):
        return instance
    return instance.with_spvs(spv_order(instance, seed)[: max(count, 0)])


def feasible_spv_pct(instance: Instance) -> float:
    if not instance.spvs:
        return 0.0
    ok = sum(1 for s in instance.spvs if spv_has_feasible_budget(s, instance))
    return 100.0 * ok / len(instance.spvs)


def detour_minutes(instance: Instance, solution) -> list:
    """Extra minutes each active SPV drives versus its direct trip."""
    out = []
    tau = instance.params.service_time
    for sid, plan in sorted(solution.spv_plans.items()):
        s = instance.spv_by_id[sid]
        start = instance.spv_start(s)
        to_depot = 0.0 if instance.spv_origins_at_depot else instance.time(s.origin, instance.depot, SPV)
        route = instance.model.minutes(instance.network.path_miles(plan.route), SPV)
        out.append(to_depot + tau + route - instance.time(start, s.destination, SPV))
    return out


def metrics_row(instance, solution, wall):
    cb = solution.cost_breakdown
    return {
        "spv_count": len(instance.spvs), "pdos_by_spv": solution.pdos_by_spv, "pdos_by_dv": solution.pdos_by_dv,
        "spv_cost": round(cb.spv_cost, 6), "dv_cost": round(cb.dv_cost, 6), "total": round(cb.total, 6),
        "spv_vmt": round(cb.spv_vmt, 6), "dv_vmt": round(cb.dv_vmt, 6), "dv_count": len(solution.dv_plans),
        "wall_seconds": round(wall, 3),
    }


def run_point(instance: Instance, config: DhConfig, timing=True):
    t0 = time.perf_counter()
    solution, trace = solve_dh(instance, config)
    wall = time.perf_counter() - t0 if timing else 0.0
    report = validate_solution(instance, solution)
    if not report.ok:
        raise InvalidSolution("solution failed validation: " + "; ".join(v.message for v in report.violations))
    return solution, trace, metrics_row(instance, solution, wall)


def _sweep_worker(job):
    axis, value, instance, config, timing = job
    solution, _, row = run_point(instance, config, timing)
    return axis, value, row, feasible_spv_pct(instance), detour_minutes(instance, solution)


def _write_csv(rows, columns, path):
    buf = io.StringIO()
    buf.write(METRICS_VERSION + "\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _config(args) -> DhConfig:
    return DhConfig(args.batch_size, args.backend, args.epsilon, args.seed,
                    None if args.max_routes <= 0 else args.max_routes)


# ---------------------------------------------------------------- commands
def cmd_generate(args) -> int:
    if args.grid:
        rows, cols = args.grid
        kind, nodes = "grid", rows * cols
    else:
        rows = cols = 0
        kind, nodes = "planar", args.planar
    spec = GenSpec(kind=kind, rows=rows, cols=cols, nodes=nodes, area=args.area, depot=args.depot,
                   pdos=args.pdos, spvs=args.spvs, detour_willingness=args.detour, seed=args.seed,
                   latest_menu=tuple(args.latest_menu), spv_window_span=args.spv_window_span)
    instance = generate_instance(spec)
    save_instance(instance, args.output)
    print(args.output)
    print(f"nodes={len(instance.network.nodes)} arcs={len(instance.network.arcs)} depot={instance.depot} "
          f"pdos={len(instance.pdos)} spvs={len(instance.spvs)}")
    return 0


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    if args.origins_at_depot:
        instance = instance.with_origins_at_depot(True)
    instance = limit_spvs(instance, args.spvs_limit, args.seed)
    solution, trace, row = run_point(instance, _config(args), not args.no_timing)
    columns = list(COLUMNS)
    if args.oracle:
        from .oracle import solve_exact_bruteforce

        _, oracle_cost = solve_exact_bruteforce(instance)
        row["gap"] = round(incumbent_gap(solution.cost_breakdown.total, oracle_cost), 6)
        columns.append("gap")
    if args.solution:
        save_solution(solution, args.solution)
    log.info("%d iterations, %d switches", len(trace.iterations), len(trace.switch_log))
    _write_csv([row], columns, args.csv)
    return 0


def cmd_sweep(args) -> int:
    base = load_instance(args.instance)
    config = _config(args)
    timing = not args.no_timing
    jobs = []
    if args.spv_counts is not None:
        for m in args.spv_counts:
            jobs.append(("spv_count", m, limit_spvs(base, m, args.seed), config, timing))
    elif args.detour is not None:
        for w in args.detour:
            jobs.append(("detour", w, with_detour(base, w), config, timing))
    elif args.depots is not None:
        for d in args.depots:
            jobs.append(("depot", d, base.with_depot(resolve_depot(base.network, d)), config, timing))
    else:
        for flag in (False, True):
            jobs.append(("origins_at_depot", int(flag), base.with_origins_at_depot(flag), config, timing))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]
    rows = []
    hist = []
    for axis, value, row, pct, detours in results:
        rows.append({"axis": axis, "value": value, **row, "feasible_spv_pct": round(pct, 6)})
        counts = {}
        for d in detours:
            b = int(max(d, 0.0) // HISTOGRAM_BIN)
            counts[b] = counts.get(b, 0) + 1
        for b in sorted(counts):
            hist.append({"axis": axis, "value": value, "bin_lo": b * HISTOGRAM_BIN,
                         "bin_hi": (b + 1) * HISTOGRAM_BIN, "count": counts[b]})
    _write_csv(rows, ["axis", "value", *COLUMNS, "feasible_spv_pct"], args.csv)
    if args.histogram:
        _write_csv(hist, ["axis", "value", "bin_lo", "bin_hi", "count"], args.histogram)
    return 0


# ------------------------------------------------------------------- parser
def _solver_flags(p):
    p.add_argument("instance", help="instance file")
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--backend", choices=["auto", "exact", "benders", "greedy"], default="auto")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-routes", type=int, default=DEFAULT_MAX_ROUTES, help="per SPV; 0 means unbounded")
    p.add_argument("--csv", default="-", help="metrics CSV path (default stdout)")
    p.add_argument("--no-timing", action="store_true", help="report wall_seconds as 0 for reproducible output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdship", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance")
    net = g.add_mutually_exclusive_group(required=True)
    net.add_argument("--grid", type=_grid_dims, metavar="RxC")
    net.add_argument("--planar", type=int, metavar="NODES")
    g.add_argument("--area", type=float, default=32.0, help="square miles")
    g.add_argument("--pdos", type=int, required=True)
    g.add_argument("--spvs", type=int, default=0)
    g.add_argument("--depot", default="boundary", help="boundary, center or node:<id>")
    g.add_argument("--detour", type=float, default=30.0, help="SPV detour willingness (minutes)")
    g.add_argument("--latest-menu", type=_int_list, default=[720, 960, 1200])
    g.add_argument("--spv-window-span", type=int, default=600)
    g.add_argument("--seed", type=int, default=default_seed())
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the heuristic on one instance")
    _solver_flags(s)
    s.add_argument("--spvs-limit", type=int, default=None, help="use only the first N SPVs in seeded order")
    s.add_argument("--origins-at-depot", action="store_true")
    s.add_argument("--oracle", action="store_true", help="also solve exactly and report the gap")
    s.add_argument("-o", "--solution", help="solution output path")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="vary one axis and emit one metrics row per point")
    _solver_flags(w)
    axis = w.add_mutually_exclusive_group(required=True)
    axis.add_argument("--spv-counts", type=_int_list, help="LO:HI:STEP or comma list")
    axis.add_argument("--detour", type=_float_list, help="comma list of minutes")
    axis.add_argument("--depots", type=_str_list, help="comma list of boundary/center/node:<id>")
    axis.add_argument("--origins-at-depot", action="store_true", help="compare both settings")
    w.add_argument("--histogram", help="write SPV detour-time histogram CSV here")
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.WARNING - 10 * min(args.verbose, 2))
    try:
        return args.func(args)
    except InfeasibleInstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("culprits: " + " ".join(map(str, exc.culprits)), file=sys.stderr)
        return 3
    except InvalidSolution as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (CrowdshipError, CapacityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
