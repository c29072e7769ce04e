# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Contract mirrors ``crowdship._pykernels`` exactly."""
import heapq

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, floor

cnp.import_array()

cdef double SLACK = 1e-9


def dijkstra(indptr, indices, weights, Py_ssize_t source):
    cdef const cnp.int64_t[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int64_t[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[:] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef cnp.ndarray[double] dist_a = np.full(n, INFINITY)
    cdef cnp.ndarray[cnp.int64_t] pred_a = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t] done_a = np.zeros(n, dtype=np.uint8)
    cdef double[:] dist = dist_a
    cdef cnp.int64_t[:] pred = pred_a
    cdef cnp.uint8_t[:] done = done_a
    cdef Py_ssize_t u, v, e
    cdef double d, nd, we
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = 1
        for e in range(ip[u], ip[u + 1]):
            we = w[e]
            if we == INFINITY:
                continue
            v = ix[e]
            if done[v]:
                continue
            nd = d + we
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and u < pred[v]:
                pred[v] = u
    return dist_a.tolist(), pred_a.tolist()


cdef inline double tick(double w):
    return floor(w * 1e6 + 0.5)


def budget_paths(indptr, indices, weights, Py_ssize_t source, Py_ssize_t target,
                 double budget, lower=None, Py_ssize_t k=-1):
    cdef const cnp.int64_t[:] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int64_t[:] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[:] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef bint use_lower = lower is not None
    cdef const double[:] lb
    if use_lower:
        lb = np.ascontiguousarray(lower, dtype=np.float64)
    if source == target:
        return [(0.0, (source,))] if k != 0 else []
    if k == 0:
        return []

    cdef cnp.ndarray[cnp.int64_t] path_a = np.empty(n + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t] cursor_a = np.empty(n + 1, dtype=np.int64)
    cdef cnp.ndarray[double] costs_a = np.empty(n + 1)
    cdef cnp.ndarray[cnp.uint8_t] on_a = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[:] path = path_a
    cdef cnp.int64_t[:] cursor = cursor_a
    cdef double[:] costs = costs_a
    cdef cnp.uint8_t[:] on_path = on_a
    cdef Py_ssize_t depth = 0, u, v, e, i
    cdef double c, rest
    cdef double limit = budget + SLACK
    cdef bint have_kth = False
    cdef double kth = 0.0

    found = []
    path[0] = source
    costs[0] = 0.0
    cursor[0] = ip[source]
    on_path[source] = 1
    while depth >= 0:
        u = path[depth]
        e = cursor[depth]
        if e >= ip[u + 1]:
            on_path[u] = 0
            depth -= 1
            continue
        cursor[depth] = e + 1
        v = ix[e]
        if on_path[v]:
            continue
        c = costs[depth] + w[e]
        if c > limit:
            continue
        rest = 0.0
        if use_lower:
            rest = lb[v]
            if c + rest > limit + SLACK:
                continue
        if have_kth and tick(c + rest - SLACK) >= kth:
            continue
        if v == target:
            found.append((tick(c), tuple([path[i] for i in range(depth + 1)]) + (v,), c))
            if k > 0:
                if not have_kth and len(found) == k:
                    found.sort()
                    kth = found[k - 1][0]
                    have_kth = True
                elif len(found) >= 2 * k + 16:
                    found.sort()
                    del found[k:]
                    kth = found[k - 1][0]
            continue
        depth += 1
        path[depth] = v
        costs[depth] = c
        cursor[depth] = ip[v]
        on_path[v] = 1
    found.sort()
    if k >= 0:
        del found[k:]
    return [(t[2], t[1]) for t in found]
