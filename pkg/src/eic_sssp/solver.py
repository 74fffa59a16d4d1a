"""Stepped SSSP solver driven by scheduling pairs <lb, ub> and selection thresholds.

Each step settles every vertex whose distance falls in ``[lb, ub)``.  Settled
vertices below the selection threshold ``st`` push their arcs into the window;
those in ``[st, lb)`` are reached by unsettled vertices pulling from them.
Rounds inside a step are synchronous: every round reads one snapshot of
``dist`` and the resulting updates are applied by the owner of each target
vertex, so results do not depend on the worker count.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .graph import Graph, Preprocessed, preprocess
from .heuristics import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_ST_NUM, StepSchedule, compute_st
from .graph import DEFAULT_RATIO_NUM

DEFAULT_FUSED = 1 << 8

# below this many items per worker, a phase runs on the calling thread
_MIN_CHUNK = 2048

UNINDEXED, IRRELEVANT, LONG_RELEVANT, SHORT_RELEVANT = 0, 1, 2, 3


@dataclass(frozen=True)
class SolverConfig:
    alpha: int = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    ratio_num: int = DEFAULT_RATIO_NUM
    st_num: int = DEFAULT_ST_NUM
    fused: int = DEFAULT_FUSED
    workers: int = 1
    st_candidates: str = "grid"

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.fused < 1:
            raise ValueError("fused must be at least 1")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")


@dataclass
class RunMetrics:
    extended_paths: int = 0
    synchronizations: int = 0
    traversals: int = 0
    relax_attempts: int = 0
    relax_successes: int = 0
    rounds: int = 0
    steps: int = 0


class SsspState:
    """Tentative distances, parents and the current step triple."""

    def __init__(self, vertex_count: int, source: int, lock_stripes: int = 64):
        self.source = source
        self.dist = np.full(vertex_count, np.inf)
        self.parent = np.full(vertex_count, -1, dtype=np.int64)
        self.dist[source] = 0.0
        self.parent[source] = source
        self.st = 0.0
        self.lb = 0.0
        self.ub = math.inf
        # distance each vertex had when its path was last extended
        self.last_extended = np.full(vertex_count, np.nan)
        self._locks = [threading.Lock() for _ in range(lock_stripes)]

    def relax_min(self, v: int, new_dist: float, new_parent: int) -> bool:
        """Set ``<dist[v], parent[v]>`` if ``new_dist`` is strictly smaller."""
        with self._locks[v % len(self._locks)]:
            if self.dist[v] > new_dist:
                self.dist[v] = new_dist
                self.parent[v] = new_parent
                return True
            return False


class FrontierSet:
    """Vertex set with O(1) idempotent insertion (membership flag per vertex)."""

    def __init__(self, vertex_count: int):
        self._member = np.zeros(vertex_count, dtype=bool)
        self._items: list[int] = []
        self._lock = threading.Lock()

    def insert(self, v: int) -> None:
        with self._lock:
            if not self._member[v]:
                self._member[v] = True
                self._items.append(v)

    def __contains__(self, v: int) -> bool:
        return bool(self._member[v])

    def __len__(self) -> int:
        return len(self._items)

    def drain(self) -> np.ndarray:
        out = np.array(sorted(self._items), dtype=np.int64)
        self._member[out] = False
        self._items = []
        return out


def frontier_insert(frontiers: FrontierSet, v: int) -> None:
    frontiers.insert(v)


class WorkerPool:
    """Threads that run the compiled phases over contiguous chunks."""

    def __init__(self, workers: int, vertex_count: int):
        self.workers = workers
        self._executor = ThreadPoolExecutor(workers) if workers > 1 else None
        self._owners = np.linspace(0, vertex_count, workers + 1).astype(np.int64)
        self.vertex_count = vertex_count

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def map(self, fn, items):
        if self._executor is None or len(items) == 1:
            return [fn(x) for x in items]
        return list(self._executor.map(fn, items))

    def split(self, items: np.ndarray) -> list[np.ndarray]:
        if self.workers == 1 or items.size < _MIN_CHUNK * 2:
            return [items]
        parts = min(self.workers, items.size // _MIN_CHUNK)
        return np.array_split(items, parts)

    def owner_bounds(self, work: int) -> np.ndarray:
        """Vertex ranges owned by each worker when applying ``work`` updates."""
        if self.workers == 1 or work < _MIN_CHUNK * 2:
            return np.array([0, self.vertex_count], dtype=np.int64)
        return self._owners


class SolveResult(NamedTuple):
    dist: np.ndarray
    parent: np.ndarray
    metrics: RunMetrics


@dataclass
class StepEvent:
    """Snapshot passed to ``on_step`` after each step completes."""

    index: int
    st: float
    lb: float
    ub: float
    dist: np.ndarray
    parent: np.ndarray
    schedule: StepSchedule | None = field(repr=False, default=None)


def _serial_pool(graph: Graph) -> WorkerPool:
    return WorkerPool(1, graph.vertex_count)


def init_frontiers(prepared: Preprocessed, state: SsspState, metrics: RunMetrics, pool: WorkerPool | None = None) -> np.ndarray:
    """Run a step's pull phase (when ``st < lb``) and return its first frontier.

    The frontier holds settled vertices in ``[max(0, lb - maxW), st]``, whose
    arcs into the window are pushed, plus every vertex already in ``[lb, ub)``.
    """
    g = prepared.graph
    pool = pool or _serial_pool(g)
    st, lb, ub = state.st, state.lb, state.ub
    d = state.dist
    lb0 = max(0.0, lb - prepared.quantizer.max_weight)
    base = (d >= lb0) & (d <= st)
    if st != lb:
        pulling = np.flatnonzero(d > lb)
        args = (g.offsets, g.arc_targets, g.arc_weights, d, state.parent)
        counts = pool.map(lambda chunk: _kernels.pull_scan(*args, chunk, st, lb, ub), pool.split(pulling))
        scanned, attempts, successes = (sum(c) for c in zip(*counts))
        metrics.traversals += scanned
        metrics.relax_attempts += attempts
        metrics.relax_successes += successes
        metrics.synchronizations += 1
    return np.flatnonzero(base | ((d >= lb) & (d < ub)))


def _push_round(g: Graph, state: SsspState, metrics: RunMetrics, paths: np.ndarray, pool: WorkerPool, in_next: np.ndarray) -> np.ndarray:
    args = (g.offsets, g.arc_targets, g.arc_weights, state.dist, state.parent)
    lb, ub = state.lb, state.ub
    bounds = pool.owner_bounds(paths.size)
    owners = bounds.size - 1

    # phase A: candidates from a dist snapshot, grouped by the owner of their target
    def select(chunk):
        v, d, u, selected, skipped = _kernels.push_select(*args, chunk, lb, ub)
        if owners > 1:
            v, d, u, counts = _kernels.bucket_by_owner(v, d, u, bounds)
        else:
            counts = np.array([v.size], dtype=np.int64)
        return v, d, u, counts, selected, skipped

    parts = pool.map(select, pool.split(paths))
    if len(parts) == 1:
        cand_v, cand_d, cand_u = parts[0][:3]
    else:
        cand_v = np.concatenate([p[0] for p in parts])
        cand_d = np.concatenate([p[1] for p in parts])
        cand_u = np.concatenate([p[2] for p in parts])
    selected = sum(p[4] for p in parts)
    metrics.traversals += selected
    metrics.relax_attempts += selected - sum(p[5] for p in parts)

    # (chunk, owner) slices of the concatenated candidates; rows are owners
    counts = np.array([p[3] for p in parts], dtype=np.int64)
    ends = np.cumsum(counts.ravel()).reshape(counts.shape)
    starts = ends - counts

    # phase B: each owner applies its slices in chunk order
    applied = pool.map(
        lambda k: _kernels.apply_candidates(
            state.dist, state.parent, cand_v, cand_d, cand_u,
            np.ascontiguousarray(starts[:, k]), np.ascontiguousarray(ends[:, k]), in_next,
        ),
        list(range(owners)),
    )
    # owner ranges are ascending and each output is sorted, so this is sorted
    nxt = applied[0][0] if owners == 1 else np.concatenate([a[0] for a in applied])
    metrics.relax_successes += sum(a[1] for a in applied)
    in_next[nxt] = False
    return nxt


def run_step(
    prepared: Preprocessed,
    state: SsspState,
    metrics: RunMetrics,
    frontier: np.ndarray,
    *,
    fused: int = 1,
    refine_vertices: np.ndarray | None = None,
    pool: WorkerPool | None = None,
) -> None:
    """Relaxation rounds until the frontier empties.

    ``fused`` consecutive rounds share one barrier.  When ``refine_vertices``
    is given (first step only), ``ub`` is lowered after every round to the
    smallest tentative distance among them.
    """
    g = prepared.graph
    pool = pool or _serial_pool(g)
    deg = g.degrees
    d = state.dist
    in_next = np.zeros(g.vertex_count, dtype=bool)
    in_block = 0
    while True:
        df = d[frontier]
        # leaves cannot extend anywhere new, and nothing at or past ub selects an arc
        keep = (df < state.ub) & ~((df > 0) & (deg[frontier] == 1))
        paths = frontier[keep]
        if paths.size == 0:
            break
        fresh = paths[d[paths] != state.last_extended[paths]]
        metrics.extended_paths += fresh.size
        state.last_extended[fresh] = d[fresh]

        frontier = _push_round(g, state, metrics, paths, pool, in_next)
        metrics.rounds += 1
        if in_block == 0:
            metrics.synchronizations += 1
        in_block = (in_block + 1) % fused
        if refine_vertices is not None and refine_vertices.size:
            state.ub = min(state.ub, float(d[refine_vertices].min()))


def _as_prepared(graph: Graph | Preprocessed, ratio_num: int) -> Preprocessed | None:
    if isinstance(graph, Preprocessed):
        return graph
    if graph.edge_count == 0:
        return None
    return preprocess(graph, ratio_num)


def solve(
    graph: Graph | Preprocessed,
    source: int,
    config: SolverConfig | None = None,
    on_step: Callable[[StepEvent], None] | None = None,
) -> SolveResult:
    """Shortest distances and a shortest-path tree from ``source``.

    ``graph`` may be a :class:`Graph` or the output of :func:`preprocess`;
    pass the latter to keep preprocessing out of repeated solves.
    """
    config = config or SolverConfig()
    g = graph.graph if isinstance(graph, Preprocessed) else graph
    if not 0 <= source < g.vertex_count:
        raise ValueError(f"source {source} out of range [0, {g.vertex_count})")
    state = SsspState(g.vertex_count, source)
    metrics = RunMetrics()
    deg = g.degrees
    if g.edge_count == 0 or deg[source] == 0:
        return SolveResult(state.dist, state.parent, metrics)

    prepared = _as_prepared(graph, config.ratio_num)
    q = prepared.quantizer
    max_w = q.max_weight
    schedule = StepSchedule(g, prepared.degrees, q, config.alpha, config.beta, config.st_num)
    high = np.flatnonzero(deg >= prepared.degrees.highD0)
    refine = high[high != source]
    d = state.dist

    with WorkerPool(config.workers, g.vertex_count) as pool:
        schedule.gap(0.0)
        first = True
        while True:
            metrics.steps += 1
            frontier = init_frontiers(prepared, state, metrics, pool)
            fused = config.fused if not first and schedule.gap(state.lb) == max_w else 1
            run_step(
                prepared, state, metrics, frontier,
                fused=fused, refine_vertices=refine if first else None, pool=pool,
            )
            if first:
                st0 = float(d[high].min()) if high.size else math.inf
                schedule.st0 = st0 if math.isfinite(st0) else None
                first = False
            if math.isinf(state.ub):
                _emit(on_step, metrics, state, None)
                break
            schedule.advance(state.ub, d)
            _emit(on_step, metrics, state, schedule)
            reached = d[np.isfinite(d)]
            if reached.max() + max_w < state.ub or schedule.unsettled_degree_sum == 0:
                break
            st = compute_st(state.lb, state.ub, schedule, q, config.st_candidates)
            lb = state.ub
            ub = lb + schedule.gap(lb)
            if not ub > lb:
                ub = float(np.nextafter(lb, np.inf))
            state.st, state.lb, state.ub = st, lb, ub
    return SolveResult(state.dist, state.parent, metrics)


def _emit(on_step, metrics, state, schedule):
    if on_step is not None:
        on_step(StepEvent(metrics.steps, state.st, state.lb, state.ub, state.dist.copy(), state.parent.copy(), schedule))


def classify_edges(graph: Graph, true_dist: np.ndarray, lb: float, ub: float) -> np.ndarray:
    """Class of every arc (u -> v) indexed for u by the pair <lb, ub>.

    Returns one code per arc, in arc order: UNINDEXED, IRRELEVANT,
    LONG_RELEVANT or SHORT_RELEVANT.
    """
    src = np.repeat(np.arange(graph.vertex_count), graph.degrees)
    du = true_dist[src]
    dv = true_dist[graph.arc_targets]
    reach = du + graph.arc_weights
    out = np.full(graph.arc_targets.size, UNINDEXED, dtype=np.int8)
    indexed = (reach >= lb) & (reach < ub)
    out[indexed & (du < lb) & (dv < lb)] = IRRELEVANT
    out[indexed & (du < lb) & (dv >= lb)] = LONG_RELEVANT
    out[indexed & (du >= lb)] = SHORT_RELEVANT
    return out
