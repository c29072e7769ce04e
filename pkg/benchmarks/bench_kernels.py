"""Compare the compiled and pure-Python kernels on grid networks.

    python benchmarks/bench_kernels.py [--size 20] [--repeat 3]

Each kernel runs on identical CSR inputs; outputs are checked for equality
before timings are reported.
"""
import argparse
import timeit

from crowdship import _pykernels
from crowdship.net_graph import SPV, CostModel
from crowdship.scenario import GenSpec, generate_instance

try:
    from crowdship import _ckernels
except ImportError:
    _ckernels = None


def workloads(size):
    inst = generate_instance(GenSpec(rows=size, cols=size, pdos=0, spvs=0))
    net = inst.network
    model = CostModel()
    indptr, indices, weights = net.csr(lambda length: model.minutes(length, SPV))
    n = len(net.nodes)
    target = n - 1
    near = 4 * size + 4  # a 4x4 block away: full enumeration stays tractable
    # exact lower bounds: distances to the target on the reversed graph
    rev = [[] for _ in range(n)]
    for u in range(n):
        for e in range(indptr[u], indptr[u + 1]):
            rev[indices[e]].append((u, weights[e]))
    r_ptr, r_idx, r_w = [0], [], []
    for v in range(n):
        for u, w in rev[v]:
            r_idx.append(u)
            r_w.append(w)
        r_ptr.append(len(r_idx))
    lower = _pykernels.dijkstra(r_ptr, r_idx, r_w, target)[0]
    lower_near = _pykernels.dijkstra(r_ptr, r_idx, r_w, near)[0]
    shortest = lower[0]
    return {
        "dijkstra (all sources)": lambda k: [k.dijkstra(indptr, indices, weights, s) for s in range(n)],
        "budget_paths k=200": lambda k: k.budget_paths(indptr, indices, weights, 0, target, shortest * 1.3,
                                                       lower, 200),
        "budget_paths all, +50%": lambda k: k.budget_paths(indptr, indices, weights, 0, near,
                                                           lower_near[0] * 1.5, lower_near, -1),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20, help="grid side length")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':<26}{'python s':>11}{'cython s':>11}{'speedup':>10}")
    for name, job in workloads(args.size).items():
        assert job(_pykernels) == job(_ckernels), f"{name}: backends disagree"
        py = min(timeit.repeat(lambda: job(_pykernels), number=1, repeat=args.repeat))
        cy = min(timeit.repeat(lambda: job(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:<26}{py:>11.4f}{cy:>11.4f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
