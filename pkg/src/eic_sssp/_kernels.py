"""Compiled inner loops.  All run without the GIL so worker threads overlap."""
from __future__ import annotations

import numpy as np
from numba import njit

INF = np.inf


@njit(nogil=True, cache=True)
def _first_at_least(weights, a, b, base, bound):
    # first arc index e in [a, b) with base + weights[e] >= bound
    while a < b:
        mid = (a + b) >> 1
        if base + weights[mid] >= bound:
            b = mid
        else:
            a = mid + 1
    return a


@njit(nogil=True, cache=True)
def push_select(offsets, targets, weights, dist, parent, paths, lb, ub):
    """Relaxation candidates from ``paths`` for arcs with lb <= dist[u]+w < ub.

    Reads a snapshot of ``dist``; candidates that cannot beat the current
    ``dist[v]`` are dropped here.  Returns (v, new_dist, u, selected, skipped),
    where ``selected`` counts every arc in the windows and ``skipped`` those
    leading back to ``parent[u]``.
    """
    n = paths.size
    lo = np.empty(n, np.int64)
    hi = np.empty(n, np.int64)
    selected = 0
    for i in range(n):
        u = paths[i]
        du = dist[u]
        b = offsets[u + 1]
        lo[i] = _first_at_least(weights, offsets[u], b, du, lb)
        hi[i] = _first_at_least(weights, lo[i], b, du, ub)
        selected += hi[i] - lo[i]
    out_v = np.empty(selected, np.int64)
    out_d = np.empty(selected, np.float64)
    out_u = np.empty(selected, np.int64)
    k = 0
    skipped = 0
    for i in range(n):
        u = paths[i]
        du = dist[u]
        pu = parent[u]
        for e in range(lo[i], hi[i]):
            v = targets[e]
            if v == pu:
                skipped += 1
                continue
            nd = du + weights[e]
            if nd < dist[v]:
                out_v[k] = v
                out_d[k] = nd
                out_u[k] = u
                k += 1
    return out_v[:k], out_d[:k], out_u[:k], selected, skipped


@njit(nogil=True, cache=True)
def bucket_by_owner(cand_v, cand_d, cand_u, bounds):
    """Stable counting sort of candidates by the owner range of their target.

    Owner ``k`` holds vertices ``[bounds[k], bounds[k + 1])``.  Returns the
    reordered arrays and the per-owner counts.
    """
    owners = bounds.size - 1
    who = np.searchsorted(bounds, cand_v, side="right") - 1
    counts = np.zeros(owners, np.int64)
    for i in range(who.size):
        counts[who[i]] += 1
    pos = np.zeros(owners, np.int64)
    for k in range(1, owners):
        pos[k] = pos[k - 1] + counts[k - 1]
    out_v = np.empty_like(cand_v)
    out_d = np.empty_like(cand_d)
    out_u = np.empty_like(cand_u)
    for i in range(who.size):
        j = pos[who[i]]
        out_v[j] = cand_v[i]
        out_d[j] = cand_d[i]
        out_u[j] = cand_u[i]
        pos[who[i]] = j + 1
    return out_v, out_d, out_u, counts


@njit(nogil=True, cache=True)
def apply_candidates(dist, parent, cand_v, cand_d, cand_u, starts, stops, in_next):
    """Strictly-decreasing updates from the index ranges ``[starts[r], stops[r])``.

    Ranges are visited in order, so among equal offers the first one wins.
    Returns the newly inserted frontier vertices, sorted, and the number of
    successful updates.
    """
    total = 0
    for r in range(starts.size):
        total += stops[r] - starts[r]
    out = np.empty(total, np.int64)
    k = 0
    successes = 0
    for r in range(starts.size):
        for i in range(starts[r], stops[r]):
            v = cand_v[i]
            if cand_d[i] < dist[v]:
                dist[v] = cand_d[i]
                parent[v] = cand_u[i]
                successes += 1
                if not in_next[v]:
                    in_next[v] = True
                    out[k] = v
                    k += 1
    return np.sort(out[:k]), successes


@njit(nogil=True, cache=True)
def pull_scan(offsets, targets, weights, dist, parent, vertices, st, lb, ub):
    """Pull phase: each unsettled vertex scans arcs with w < ub - st and takes
    the best path offered by a neighbour settled in [st, lb).

    Only ``dist``/``parent`` of the scanning vertex are written.  Returns
    (scanned, attempts, successes).
    """
    limit = ub - st
    scanned = 0
    attempts = 0
    successes = 0
    for i in range(vertices.size):
        u = vertices[i]
        for e in range(offsets[u], offsets[u + 1]):
            w = weights[e]
            if not w < limit:
                break
            scanned += 1
            v = targets[e]
            dv = dist[v]
            if st <= dv and dv < lb:
                nd = dv + w
                if nd < ub:
                    attempts += 1
                    if nd < dist[u]:
                        dist[u] = nd
                        parent[u] = v
                        successes += 1
    return scanned, attempts, successes


@njit(cache=True)
def nlt_rounds(offsets, targets, weights, dist, frontier, lt, rank):
    """Relaxation rounds restricted to new paths of length >= lt.

    Rounds are synchronous: a round extends each frontier vertex with the
    distance it had when the round began.  When a vertex expanded in an
    earlier round improves, its stale paths are at least (its distance at
    the start of the round + its lightest arc); the smallest such bound is
    returned.  ``dist`` is updated in place.  ``rank`` fixes the visiting
    order inside a round, which does not affect the result.
    """
    n = dist.size
    relaxed = np.zeros(n, np.bool_)
    in_next = np.zeros(n, np.bool_)
    result = INF
    cur = frontier[np.argsort(rank[frontier], kind="mergesort")]
    while cur.size > 0:
        cur_d = dist[cur]
        nxt = np.empty(n, np.int64)
        k = 0
        for i in range(cur.size):
            u = cur[i]
            du = cur_d[i]
            for e in range(offsets[u], offsets[u + 1]):
                v = targets[e]
                nd = du + weights[e]
                if nd >= lt and nd < dist[v]:
                    if not in_next[v]:
                        # first improvement this round: dist[v] is still its round-start value
                        if relaxed[v]:
                            bound = dist[v] + weights[offsets[v]]
                            if result > bound:
                                result = bound
                        in_next[v] = True
                        nxt[k] = v
                        k += 1
                    dist[v] = nd
        for i in range(cur.size):
            relaxed[cur[i]] = True
        nxt = nxt[:k]
        for i in range(k):
            in_next[nxt[i]] = False
        cur = nxt[np.argsort(rank[nxt], kind="mergesort")]
    return result
