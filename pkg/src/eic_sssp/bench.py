"""Trial runner, normalized metrics, CSV output and cross-algorithm comparison."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, fields, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import reference
from .graph import Graph, Preprocessed, preprocess
from .solver import RunMetrics, SolverConfig, solve

log = logging.getLogger(__name__)

DEFAULT_TRIALS = 64
DEFAULT_DELTA_FRACTION = 0.1
AVG = -1  # source id carried by the averaged row


class VerificationError(RuntimeError):
    pass


@dataclass
class TrialReport:
    graph_id: str
    source: int
    algorithm: str
    workers: int
    wall_ms: float
    preprocess_ms: float
    extended_paths: float
    synchronizations: float
    traversals: float
    reachable_count: float
    reachable_nonleaf_count: float
    nFrontier: float
    nSync: float
    nTrav: float
    dist_checksum: float
    reached_count: float


COLUMNS = tuple(f.name for f in fields(TrialReport))
_TEXT = {"graph_id", "algorithm"}
_INT = {"source", "workers"}


def sync_denominator(vertex_count: int) -> float:
    return math.log2(max(2, vertex_count))


def make_report(
    graph: Graph,
    source: int,
    dist: np.ndarray,
    metrics: RunMetrics,
    *,
    graph_id: str = "",
    algorithm: str = "eic",
    workers: int = 1,
    wall_ms: float = 0.0,
    preprocess_ms: float = 0.0,
) -> TrialReport:
    reached = np.isfinite(dist)
    nonleaf = reached & (graph.degrees >= 2)
    nonleaf[source] = True
    n_reached = int(reached.sum())
    n_nonleaf = int(nonleaf.sum())
    return TrialReport(
        graph_id=graph_id,
        source=int(source),
        algorithm=algorithm,
        workers=workers,
        wall_ms=wall_ms,
        preprocess_ms=preprocess_ms,
        extended_paths=metrics.extended_paths,
        synchronizations=metrics.synchronizations,
        traversals=metrics.traversals,
        reachable_count=n_reached,
        reachable_nonleaf_count=n_nonleaf,
        nFrontier=metrics.extended_paths / max(1, n_nonleaf),
        nSync=metrics.synchronizations / sync_denominator(graph.vertex_count),
        nTrav=metrics.traversals / max(1, n_reached),
        dist_checksum=float(dist[reached].sum()),
        reached_count=n_reached,
    )


def average(reports: Sequence[TrialReport]) -> TrialReport:
    if not reports:
        raise ValueError("nothing to average")
    first = reports[0]
    numeric = {
        c: float(np.mean([getattr(r, c) for r in reports]))
        for c in COLUMNS
        if c not in _TEXT and c not in _INT
    }
    return replace(first, source=AVG, **numeric)


# ---------------------------------------------------------------------------
# Algorithms


class Run(NamedTuple):
    dist: np.ndarray
    metrics: RunMetrics


def _run_eic(prepared, source, config, delta):
    r = solve(prepared, source, config)
    return Run(r.dist, r.metrics)


def _run_dijkstra(prepared, source, config, delta):
    r = reference.dijkstra(prepared.graph, source)
    return Run(r.dist, r.metrics)


def _run_bf(prepared, source, config, delta):
    r = reference.bellman_ford(prepared.graph, source)
    return Run(r.dist, r.metrics)


def _run_delta(prepared, source, config, delta):
    if delta is None:
        delta = DEFAULT_DELTA_FRACTION * prepared.graph.max_weight
    r = reference.delta_stepping(prepared.graph, source, delta)
    return Run(r.dist, r.metrics)


ALGORITHMS: dict[str, Callable] = {
    "eic": _run_eic,
    "dijkstra": _run_dijkstra,
    "bf": _run_bf,
    "bellman_ford": _run_bf,
    "delta": _run_delta,
}


def _algorithm(name: str) -> Callable:
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None


_warmed = False


def _warm_kernels() -> None:
    # first call compiles (or loads) the kernels; keep that out of timed runs
    global _warmed
    if not _warmed:
        g = Graph.from_edges(4, [0, 1, 2, 0], [1, 2, 3, 2], [1.0, 1.0, 1.0, 2.5])
        solve(g, 0, SolverConfig(workers=2))
        _warmed = True


# ---------------------------------------------------------------------------
# Trials


def sample_sources(graph: Graph, count: int, seed: int) -> np.ndarray:
    candidates = np.flatnonzero(graph.degrees > 0)
    if candidates.size == 0:
        raise ValueError("graph has no vertex with nonzero degree")
    rng = np.random.default_rng(seed)
    if candidates.size < count:
        log.warning("only %d nonzero-degree vertices; sampling %d sources with replacement", candidates.size, count)
        return rng.choice(candidates, count, replace=True)
    return rng.choice(candidates, count, replace=False)


def _prepare(graph: Graph | Preprocessed) -> tuple[Preprocessed, float]:
    if isinstance(graph, Preprocessed):
        return graph, graph.seconds * 1e3
    if graph.edge_count == 0:
        raise ValueError("graph has no edges")
    p = preprocess(graph)
    return p, p.seconds * 1e3


def distances_mismatch(a: np.ndarray, b: np.ndarray, exact: bool) -> int:
    """First index where two distance arrays disagree, or -1."""
    inf_a, inf_b = np.isinf(a), np.isinf(b)
    bad = inf_a != inf_b
    fin = ~(inf_a | inf_b)
    if exact:
        bad |= fin & (a != b)
    else:
        x, y = np.where(fin, a, 0.0), np.where(fin, b, 0.0)
        bad |= np.abs(x - y) > 1e-12 * np.maximum(np.abs(x), np.abs(y))
    idx = np.flatnonzero(bad)
    return int(idx[0]) if idx.size else -1


def integral_weights(graph: Graph) -> bool:
    w = graph.edge_w
    return bool(np.all(w == np.floor(w)))


def run_trials(
    graph: Graph | Preprocessed,
    algo: str = "eic",
    trial_count: int = DEFAULT_TRIALS,
    seed: int = 0,
    config: SolverConfig | None = None,
    *,
    verify: bool = False,
    graph_id: str = "",
    delta: float | None = None,
    sources: Sequence[int] | None = None,
    keep_dist: list | None = None,
) -> tuple[list[TrialReport], TrialReport | None]:
    """Solve from ``trial_count`` sampled sources one after another.

    Returns the per-trial reports and their arithmetic mean (``None`` when
    there are no trials).  ``keep_dist``, if given, receives each distance
    array.
    """
    run = _algorithm(algo)
    config = config or SolverConfig()
    prepared, prep_ms = _prepare(graph)
    g = prepared.graph
    if sources is None:
        sources = sample_sources(g, trial_count, seed) if trial_count else []
    if algo == "eic":
        _warm_kernels()
    else:
        prep_ms = 0.0
    exact = integral_weights(g)
    reports = []
    for s in sources:
        s = int(s)
        t0 = time.perf_counter()
        dist, metrics = run(prepared, s, config, delta)
        wall = (time.perf_counter() - t0) * 1e3
        if verify:
            oracle = reference.dijkstra(g, s).dist
            bad = distances_mismatch(dist, oracle, exact)
            if bad >= 0:
                raise VerificationError(
                    f"graph {graph_id or '?'} source {s}: {algo} dist[{bad}] = {dist[bad]!r}, "
                    f"dijkstra gives {oracle[bad]!r}"
                )
        if keep_dist is not None:
            keep_dist.append(dist)
        reports.append(
            make_report(
                g, s, dist, metrics,
                graph_id=graph_id, algorithm=algo, workers=config.workers,
                wall_ms=wall, preprocess_ms=prep_ms,
            )
        )
    return reports, (average(reports) if reports else None)


# ---------------------------------------------------------------------------
# CSV


def _fmt(column: str, value) -> str:
    if column in _TEXT:
        return str(value)
    if column == "source" and value == AVG:
        return "AVG"
    if column in _INT:
        return str(int(value))
    return "%.6g" % value


def emit_csv(reports: Sequence[TrialReport], metadata: dict | None = None) -> bytes:
    """Header, one row per trial, then an AVG row.  ``metadata`` becomes
    leading ``# key=value`` lines."""
    buf = io.StringIO()
    for k, v in (metadata or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    rows = list(reports)
    if rows:
        rows.append(average(rows))
    for r in rows:
        w.writerow([_fmt(c, getattr(r, c)) for c in COLUMNS])
    return buf.getvalue().encode()


class CsvTable(NamedTuple):
    reports: list[TrialReport]
    average: TrialReport | None
    metadata: dict[str, str]


def _parse(column: str, text: str):
    if column in _TEXT:
        return text
    if column == "source" and text == "AVG":
        return AVG
    if column in _INT:
        return int(text)
    return float(text)


def read_csv(data: bytes | str) -> CsvTable:
    text = data.decode() if isinstance(data, bytes) else data
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ValueError("missing or unexpected CSV header")
    reports, avg = [], None
    for row in rows[1:]:
        r = TrialReport(**{c: _parse(c, x) for c, x in zip(COLUMNS, row)})
        if r.source == AVG:
            avg = r
        else:
            reports.append(r)
    return CsvTable(reports, avg, meta)


def csv_metadata(graph: Graph, **extra) -> dict:
    return {"vertex_count": graph.vertex_count, "edge_count": graph.edge_count, "nsync_vertex_count": graph.vertex_count, **extra}


# ---------------------------------------------------------------------------
# Comparison

COMPARE_COLUMNS = (
    "algorithm", "trials", "wall_ms", "preprocess_ms", "nFrontier", "nSync", "nTrav",
    "traversals", "dist_checksum", "speedup",
)


class Comparison(NamedTuple):
    rows: list[dict]
    reports: dict[str, list[TrialReport]]


def speedup(reference_ms: float, wall_ms: float) -> float:
    return reference_ms / wall_ms if wall_ms > 0 else math.inf


def compare(
    graph: Graph | Preprocessed,
    algos: Sequence[str],
    trial_count: int = DEFAULT_TRIALS,
    seed: int = 0,
    config: SolverConfig | None = None,
    *,
    graph_id: str = "",
    delta: float | None = None,
) -> Comparison:
    """Run every algorithm on one shared source sample.

    ``speedup`` is the wall time of the fastest other (baseline) algorithm
    divided by each algorithm's own; with a single algorithm it is 1.0.
    Any disagreement in distances raises :class:`VerificationError`.
    """
    if not algos:
        raise ValueError("no algorithms to compare")
    for a in algos:
        _algorithm(a)
    prepared, _ = _prepare(graph)
    g = prepared.graph
    sources = sample_sources(g, trial_count, seed)
    exact = integral_weights(g)
    reports, avgs, dists = {}, {}, {}
    for a in algos:
        kept: list = []
        reports[a], avgs[a] = run_trials(
            prepared, a, config=config, graph_id=graph_id, delta=delta, sources=sources, keep_dist=kept
        )
        dists[a] = kept
    base = algos[0]
    for a in algos[1:]:
        for s, x, y in zip(sources, dists[base], dists[a]):
            bad = distances_mismatch(x, y, exact)
            if bad >= 0:
                raise VerificationError(
                    f"graph {graph_id or '?'} source {int(s)}: {a} dist[{bad}] = {y[bad]!r}, "
                    f"{base} gives {x[bad]!r}"
                )
    rows = []
    for a in algos:
        others = [avgs[b].wall_ms for b in algos if b != a] or [avgs[a].wall_ms]
        rows.append(
            {
                "algorithm": a,
                "trials": len(sources),
                "wall_ms": avgs[a].wall_ms,
                "preprocess_ms": avgs[a].preprocess_ms,
                "nFrontier": avgs[a].nFrontier,
                "nSync": avgs[a].nSync,
                "nTrav": avgs[a].nTrav,
                "traversals": avgs[a].traversals,
                "dist_checksum": avgs[a].dist_checksum,
                "speedup": speedup(min(others), avgs[a].wall_ms),
            }
        )
    return Comparison(rows, reports)


def emit_comparison(comparison: Comparison, metadata: dict | None = None) -> bytes:
    buf = io.StringIO()
    for k, v in (metadata or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for row in comparison.rows:
        w.writerow([v if isinstance(v, (str, int)) else "%.6g" % v for v in (row[c] for c in COMPARE_COLUMNS)])
    return buf.getvalue().encode()
