"""Pure-Python hot kernels (fallback for the compiled ``_ckernels`` module).

Graphs arrive in CSR form: ``indptr``/``indices``/``weights`` with node
indices ``0..n-1``. Every function here has a twin in ``_ckernels.pyx``
with an identical contract; the two must produce bit-identical results.
"""
import heapq
import math

INF = math.inf
SLACK = 1e-9


def dijkstra(indptr, indices, weights, source):
    """Single-source shortest paths.

    Returns ``(dist, pred)`` lists. ``pred[source] == -1``; unreachable
    nodes keep ``dist == inf`` and ``pred == -1``. At equal distance the
    smallest predecessor index wins. Arcs with infinite weight are skipped.
    """
    n = len(indptr) - 1
    dist = [INF] * n
    pred = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            w = weights[e]
            if w == INF:
                continue
            v = indices[e]
            if done[v]:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and u < pred[v]:
                pred[v] = u
    return dist, pred


def tick(w):
    """Path weight quantised to 1e-6, the primary key of the k-best order."""
    return math.floor(w * 1e6 + 0.5)


def budget_paths(indptr, indices, weights, source, target, budget, lower=None, k=-1):
    """All simple ``source -> target`` paths whose summed weight is ``<= budget``.

    Depth-first search over simple paths, neighbours in ascending index
    order, so complete paths appear in lexicographic order. Weights
    accumulate left to right so results match any engine summing arcs in
    path order. ``lower[v]`` (optional) is an admissible bound on the
    remaining weight from ``v`` to ``target``; it only prunes.

    With ``k >= 0`` only the ``k`` smallest paths by ``(tick(weight), node
    sequence)`` are kept. Since later paths are lexicographically larger, a
    new path can only displace the current k-th one with a strictly smaller
    tick, which lets whole subtrees of tied paths be skipped.

    Returns ``(weight, path_tuple)`` pairs sorted by ``(tick(weight), path)``.
    """
    limit = budget + SLACK
    if source == target:
        return [(0.0, (source,))] if k != 0 else []
    if k == 0:
        return []
    found = []
    kth = None  # tick of the current k-th best path once k are held
    on_path = [False] * (len(indptr) - 1)
    on_path[source] = True
    path = [source]
    costs = [0.0]
    # each frame: next edge position to try for the node at that depth
    cursor = [indptr[source]]
    while cursor:
        u = path[-1]
        e = cursor[-1]
        end = indptr[u + 1]
        if e >= end:
            cursor.pop()
            on_path[path.pop()] = False
            costs.pop()
            continue
        cursor[-1] = e + 1
        v = indices[e]
        if on_path[v]:
            continue
        c = costs[-1] + weights[e]
        if c > limit:
            continue
        rest = 0.0
        if lower is not None:
            rest = lower[v]
            if c + rest > limit + SLACK:
                continue
        if kth is not None and tick(c + rest - SLACK) >= kth:
            continue
        if v == target:
            found.append((tick(c), tuple(path) + (v,), c))
            if k > 0:
                if kth is None and len(found) == k:
                    found.sort()
                    kth = found[-1][0]
                elif len(found) >= 2 * k + 16:
                    found.sort()
                    del found[k:]
                    kth = found[-1][0]
            continue
        path.append(v)
        costs.append(c)
        on_path[v] = True
        cursor.append(indptr[v])
    found.sort()
    if k >= 0:
        del found[k:]
    return [(c, p) for _, p, c in found]
