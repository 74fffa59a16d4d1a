"""Correctness oracles, classical baselines, and next-length-threshold analysis.

The baselines are written in plain Python over adjacency lists.  They are
deliberately independent of the compiled kernels used by the main solver.
"""
from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import Graph
from .solver import LONG_RELEVANT, SHORT_RELEVANT, RunMetrics, classify_edges


@dataclass
class OracleResult:
    dist: np.ndarray
    parent: np.ndarray
    pops: int = 0
    relaxations: int = 0
    metrics: RunMetrics = field(default_factory=RunMetrics)


def _lists(graph: Graph):
    return graph.offsets.tolist(), graph.arc_targets.tolist(), graph.arc_weights.tolist()


def _check_source(graph: Graph, source: int) -> None:
    if not 0 <= source < graph.vertex_count:
        raise ValueError(f"source {source} out of range [0, {graph.vertex_count})")


def _result(dist, parent, pops, relax, metrics) -> OracleResult:
    metrics.relax_successes = relax
    return OracleResult(np.array(dist, dtype=np.float64), np.array(parent, dtype=np.int64), pops, relax, metrics)


def dijkstra(graph: Graph, source: int) -> OracleResult:
    """Binary-heap Dijkstra with lazy deletion; one synchronization per settle."""
    _check_source(graph, source)
    off, tgt, wt = _lists(graph)
    n = graph.vertex_count
    dist = [math.inf] * n
    parent = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    parent[source] = source
    heap = [(0.0, source)]
    pops = relax = scanned = 0
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        pops += 1
        for e in range(off[u], off[u + 1]):
            scanned += 1
            v = tgt[e]
            nd = du + wt[e]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                relax += 1
                heapq.heappush(heap, (nd, v))
    m = RunMetrics(extended_paths=pops, synchronizations=pops, traversals=scanned, relax_attempts=scanned, rounds=pops)
    return _result(dist, parent, pops, relax, m)


def bellman_ford(graph: Graph, source: int) -> OracleResult:
    """Frontier Bellman-Ford: a vertex is re-expanded every time it improves."""
    _check_source(graph, source)
    off, tgt, wt = _lists(graph)
    n = graph.vertex_count
    dist = [math.inf] * n
    parent = [-1] * n
    dist[source] = 0.0
    parent[source] = source
    frontier = [source]
    in_next = [False] * n
    rounds = expanded = scanned = relax = 0
    while frontier:
        rounds += 1
        expanded += len(frontier)
        nxt = []
        for u in frontier:
            du = dist[u]
            for e in range(off[u], off[u + 1]):
                scanned += 1
                v = tgt[e]
                nd = du + wt[e]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = u
                    relax += 1
                    if not in_next[v]:
                        in_next[v] = True
                        nxt.append(v)
        for v in nxt:
            in_next[v] = False
        frontier = sorted(nxt)
    m = RunMetrics(extended_paths=expanded, synchronizations=rounds, traversals=scanned, relax_attempts=scanned, rounds=rounds)
    return _result(dist, parent, expanded, relax, m)


def delta_stepping(graph: Graph, source: int, delta: float) -> OracleResult:
    """Bucketed Delta-stepping with separate light (w <= delta) and heavy phases."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    _check_source(graph, source)
    off, tgt, wt = _lists(graph)
    n = graph.vertex_count
    dist = [math.inf] * n
    parent = [-1] * n
    parent[source] = source
    buckets: dict[int, set[int]] = {}
    keys: list[int] = []
    counters = {"relax": 0, "scanned": 0}

    def relax(v: int, nd: float, u: int) -> None:
        if nd < dist[v]:
            if dist[v] < math.inf:
                buckets.get(int(dist[v] // delta), set()).discard(v)
            k = int(nd // delta)
            if k not in buckets:
                buckets[k] = set()
                heapq.heappush(keys, k)
            buckets[k].add(v)
            dist[v] = nd
            parent[v] = u
            counters["relax"] += 1

    def light_end(u: int) -> int:
        return bisect_right(wt, delta, off[u], off[u + 1])

    relax(source, 0.0, source)
    counters["relax"] = 0
    phases = expanded = 0
    while keys:
        i = heapq.heappop(keys)
        if not buckets.get(i):
            buckets.pop(i, None)
            continue
        settled = []
        while buckets.get(i):
            batch = sorted(buckets.pop(i))
            phases += 1
            expanded += len(batch)
            settled.extend(batch)
            # a vertex re-entering bucket i is collected by the next pass
            for u in batch:
                du = dist[u]
                stop = light_end(u)
                for e in range(off[u], stop):
                    counters["scanned"] += 1
                    relax(tgt[e], du + wt[e], u)
        buckets.pop(i, None)
        phases += 1
        for u in set(settled):
            du = dist[u]
            for e in range(light_end(u), off[u + 1]):
                counters["scanned"] += 1
                relax(tgt[e], du + wt[e], u)
    m = RunMetrics(
        extended_paths=expanded,
        synchronizations=phases,
        traversals=counters["scanned"],
        relax_attempts=counters["scanned"],
        rounds=phases,
    )
    return _result(dist, parent, expanded, counters["relax"], m)


# ---------------------------------------------------------------------------
# Next length threshold


def nlt(graph: Graph, source: int, lt: float, true_dist: np.ndarray, order: np.ndarray | None = None) -> float:
    """Lower bound on lengths of paths created by repeated relaxations once
    every shortest path shorter than ``lt`` is known.

    Rounds start from ``{x : true_dist[x] < lt}`` (``{source}`` when ``lt`` is
    0) and only create paths of length ``>= lt``.  ``order`` optionally gives a
    vertex permutation fixing the visiting order inside each round; the
    default is ascending vertex id.
    """
    if lt < 0:
        raise ValueError("lt must be nonnegative")
    true_dist = np.asarray(true_dist, dtype=np.float64)
    if lt == 0:
        frontier = np.array([source], dtype=np.int64)
    else:
        frontier = np.flatnonzero(true_dist < lt)
    dist = np.full(graph.vertex_count, np.inf)
    dist[frontier] = true_dist[frontier]
    rank = np.arange(graph.vertex_count, dtype=np.int64)
    if order is not None:
        rank[np.asarray(order, dtype=np.int64)] = np.arange(graph.vertex_count)
    return float(
        _kernels.nlt_rounds(graph.offsets, graph.arc_targets, graph.arc_weights, dist, frontier, float(lt), rank)
    )


def threshold_chain(graph: Graph, source: int, true_dist: np.ndarray, limit: int | None = None) -> list[float]:
    """Iterate ``t <- nlt(t)`` from 0 until it reaches infinity."""
    limit = limit if limit is not None else 4 * graph.vertex_count + 16
    chain = [0.0]
    while math.isfinite(chain[-1]):
        if len(chain) > limit:
            raise RuntimeError(f"threshold chain exceeded {limit} entries")
        nxt = nlt(graph, source, chain[-1], true_dist)
        if not nxt > chain[-1]:
            raise RuntimeError(f"nlt({chain[-1]}) = {nxt} does not increase")
        chain.append(nxt)
    return chain


def relevant_coverage(graph: Graph, source: int, true_dist: np.ndarray, lb: float, ub: float) -> np.ndarray:
    """Vertices in ``[lb, ub)`` (other than the source) that no relevant arc
    indexed by ``<lb, ub>`` reaches along a shortest path.  Empty means the
    pair covers its band."""
    codes = classify_edges(graph, true_dist, lb, ub)
    src = np.repeat(np.arange(graph.vertex_count), graph.degrees)
    tgt = graph.arc_targets
    tight = true_dist[src] + graph.arc_weights == true_dist[tgt]
    relevant = tight & ((codes == LONG_RELEVANT) | (codes == SHORT_RELEVANT))
    covered = np.zeros(graph.vertex_count, dtype=bool)
    covered[tgt[relevant]] = True
    band = (true_dist >= lb) & (true_dist < ub)
    band[source] = False
    return np.flatnonzero(band & ~covered)


def shortest_path_hops(graph: Graph, dist: np.ndarray, source: int) -> np.ndarray:
    """Fewest edges on any shortest path to each vertex (-1 if unreachable)."""
    src = np.repeat(np.arange(graph.vertex_count), graph.degrees)
    tgt = graph.arc_targets
    tight = (dist[src] + graph.arc_weights == dist[tgt]) & np.isfinite(dist[src])
    src, tgt = src[tight], tgt[tight]
    big = np.iinfo(np.int64).max // 2
    hops = np.full(graph.vertex_count, big, dtype=np.int64)
    hops[source] = 0
    while True:
        cand = np.full(graph.vertex_count, big, dtype=np.int64)
        np.minimum.at(cand, tgt, hops[src] + 1)
        new = np.minimum(hops, cand)
        if np.array_equal(new, hops):
            break
        hops = new
    hops[hops >= big] = -1
    return hops
