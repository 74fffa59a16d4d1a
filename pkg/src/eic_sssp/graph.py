"""Undirected weighted graphs in compressed adjacency form.

Every undirected edge is stored twice as directed arcs, and each vertex's arcs
are kept in ascending weight order so that the solvers can select arc ranges
by binary search.  The original edge list is retained as given, which keeps
the binary round trip exact and lets weight transforms act once per edge.
"""
from __future__ import annotations

import io
import math
import os
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, NamedTuple, Union

import numpy as np

MAGIC = b"EICG"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")
_RECORD = np.dtype([("u", "<u8"), ("v", "<u8"), ("w", "<f8")])

DEFAULT_RATIO_NUM = 1 << 12

Source = Union[str, os.PathLike, bytes, BinaryIO]


class GraphFormatError(ValueError):
    """Input could not be parsed; carries the line number or byte offset."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}: "
        elif offset is not None:
            where = f"offset {offset}: "
        super().__init__(where + message)
        self.line = line
        self.offset = offset


class GraphValidationError(ValueError):
    """Input parsed but violates a graph precondition."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    vertex_count: int
    edge_count: int
    offsets: np.ndarray
    arc_targets: np.ndarray
    arc_weights: np.ndarray
    max_weight: float
    # undirected edge list, in input order
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray

    @classmethod
    def from_edges(cls, vertex_count: int, u, v, w) -> "Graph":
        """Build a graph from an undirected edge list (each edge listed once)."""
        u = np.ascontiguousarray(u, dtype=np.int64)
        v = np.ascontiguousarray(v, dtype=np.int64)
        w = np.ascontiguousarray(w, dtype=np.float64)
        if not (u.shape == v.shape == w.shape) or u.ndim != 1:
            raise GraphValidationError("edge arrays must be 1-D and of equal length")
        if vertex_count < 0:
            raise GraphValidationError("vertex_count must be nonnegative")
        if u.size:
            lo = min(u.min(), v.min())
            hi = max(u.max(), v.max())
            if lo < 0 or hi >= vertex_count:
                raise GraphValidationError(
                    f"vertex id out of range [0, {vertex_count}): {lo if lo < 0 else hi}"
                )
            if not np.all(np.isfinite(w)) or not np.all(w > 0):
                bad = int(np.flatnonzero(~(np.isfinite(w) & (w > 0)))[0])
                raise GraphValidationError(f"edge {bad} has nonpositive or non-finite weight {w[bad]!r}")

        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        wt = np.concatenate([w, w])
        order = np.lexsort((wt, src))
        counts = np.bincount(src, minlength=vertex_count)
        offsets = np.zeros(vertex_count + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return cls(
            vertex_count=int(vertex_count),
            edge_count=int(u.size),
            offsets=_frozen(offsets),
            arc_targets=_frozen(dst[order]),
            arc_weights=_frozen(wt[order]),
            max_weight=float(w.max()) if w.size else 0.0,
            edge_u=_frozen(u),
            edge_v=_frozen(v),
            edge_w=_frozen(w),
        )

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offsets[u], self.offsets[u + 1]
        return self.arc_targets[lo:hi], self.arc_weights[lo:hi]

    def with_weights(self, w) -> "Graph":
        """Same topology, new per-edge weights (mirrored to both arcs)."""
        return Graph.from_edges(self.vertex_count, self.edge_u, self.edge_v, w)

    def is_weight_sorted(self) -> bool:
        if self.arc_weights.size < 2:
            return True
        step_down = np.diff(self.arc_weights) < 0
        # a drop is only allowed where a new vertex's arc range begins
        boundary = np.zeros(self.arc_weights.size - 1, dtype=bool)
        starts = self.offsets[1:-1]
        starts = starts[(starts > 0) & (starts < self.arc_weights.size)]
        boundary[starts - 1] = True
        return not np.any(step_down & ~boundary)


# ---------------------------------------------------------------------------
# I/O


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if hasattr(source, "read"):
        data = source.read()
        return data.encode() if isinstance(data, str) else data
    return Path(source).read_bytes()


def load_graph(source: Source, format: str = "auto", vertex_count: int | None = None) -> Graph:
    """Read a graph from a path, raw bytes, or a binary stream.

    ``format`` is ``"text"``, ``"binary"`` or ``"auto"`` (sniffs the magic
    bytes).  For text input without a ``p`` header the vertex count is taken
    from ``vertex_count`` or, failing that, from the largest id seen.
    """
    data = _read_bytes(source)
    if format == "auto":
        format = "binary" if data[:4] == MAGIC else "text"
    if format == "binary":
        return _parse_binary(data)
    if format == "text":
        return _parse_text(data, vertex_count)
    raise ValueError(f"unknown graph format {format!r}")


def _parse_text(data: bytes, vertex_count: int | None) -> Graph:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise GraphFormatError(f"not UTF-8: {exc}", offset=exc.start) from None
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    declared_edges = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) != 3 or us:
                raise GraphFormatError("bad header, expected 'p <vertex_count> <edge_count>' before edges", line=lineno)
            try:
                n, m = int(parts[1]), int(parts[2])
            except ValueError:
                raise GraphFormatError(f"bad header {line!r}", line=lineno) from None
            if vertex_count is not None and vertex_count != n:
                raise GraphFormatError(f"header declares {n} vertices, caller expects {vertex_count}", line=lineno)
            vertex_count, declared_edges = n, m
            continue
        if len(parts) != 3:
            raise GraphFormatError(f"expected 'u v w', got {line!r}", line=lineno)
        try:
            a, b, c = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"cannot parse {line!r}", line=lineno) from None
        if not (math.isfinite(c) and c > 0):
            raise GraphValidationError(f"line {lineno}: weight must be positive and finite, got {parts[2]}")
        if a < 0 or b < 0 or (vertex_count is not None and max(a, b) >= vertex_count):
            raise GraphValidationError(f"line {lineno}: vertex id out of range in {line!r}")
        us.append(a)
        vs.append(b)
        ws.append(c)
    if declared_edges is not None and declared_edges != len(us):
        raise GraphFormatError(f"header declares {declared_edges} edges, found {len(us)}")
    if vertex_count is None:
        vertex_count = max(max(us, default=-1), max(vs, default=-1)) + 1
    return Graph.from_edges(vertex_count, us, vs, ws)


def _parse_binary(data: bytes) -> Graph:
    if len(data) < _HEADER.size:
        raise GraphFormatError("truncated header", offset=len(data))
    magic, version, n, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GraphFormatError("bad magic", offset=0)
    if version != VERSION:
        raise GraphFormatError(f"unsupported version {version}", offset=4)
    need = _HEADER.size + m * _RECORD.itemsize
    if len(data) < need:
        complete = (len(data) - _HEADER.size) // _RECORD.itemsize
        raise GraphFormatError(
            f"truncated record {complete} of {m}", offset=_HEADER.size + complete * _RECORD.itemsize
        )
    if len(data) > need:
        raise GraphFormatError("trailing bytes after last record", offset=need)
    rec = np.frombuffer(data, dtype=_RECORD, count=m, offset=_HEADER.size)
    if m and max(rec["u"].max(), rec["v"].max()) >= n:
        raise GraphValidationError("vertex id out of range")
    return Graph.from_edges(n, rec["u"].astype(np.int64), rec["v"].astype(np.int64), rec["w"])


def dump_binary(graph: Graph) -> bytes:
    rec = np.empty(graph.edge_count, dtype=_RECORD)
    rec["u"] = graph.edge_u
    rec["v"] = graph.edge_v
    rec["w"] = graph.edge_w
    return _HEADER.pack(MAGIC, VERSION, graph.vertex_count, graph.edge_count) + rec.tobytes()


def dump_text(graph: Graph) -> bytes:
    out = io.StringIO()
    out.write(f"p {graph.vertex_count} {graph.edge_count}\n")
    for a, b, c in zip(graph.edge_u.tolist(), graph.edge_v.tolist(), graph.edge_w.tolist()):
        out.write(f"{a} {b} {c!r}\n")
    return out.getvalue().encode("utf-8")


def store_graph(graph: Graph, path: str | os.PathLike, format: str = "binary") -> None:
    data = dump_binary(graph) if format == "binary" else dump_text(graph)
    Path(path).write_bytes(data)


# ---------------------------------------------------------------------------
# Preprocessing


@dataclass(frozen=True, eq=False)
class WeightQuantizer:
    """Empirical weight quantiles: ``table[x] == maxW(G, x / (ratio_num - 1))``."""

    table: np.ndarray
    ratio_num: int

    @classmethod
    def from_weights(cls, weights, ratio_num: int = DEFAULT_RATIO_NUM) -> "WeightQuantizer":
        if ratio_num < 2:
            raise ValueError("ratio_num must be at least 2")
        ws = np.sort(np.asarray(weights, dtype=np.float64))
        m = ws.size
        if m == 0:
            raise GraphValidationError("empty weight distribution")
        x = np.arange(ratio_num, dtype=np.int64)
        # smallest count k with k/m >= x/(ratio_num-1), in exact integer arithmetic
        k = (x * m + ratio_num - 2) // (ratio_num - 1)
        table = ws[np.maximum(k, 1) - 1]
        return cls(table=_frozen(table), ratio_num=int(ratio_num))

    @property
    def max_weight(self) -> float:
        return float(self.table[-1])

    def max_w(self, ratio: float) -> float:
        if not 0.0 <= ratio <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {ratio!r}")
        return float(self.table[int(math.floor(ratio * (self.ratio_num - 1) + 0.5))])


def high_degree_threshold(histogram: np.ndarray) -> int:
    """Weighted-median degree of a vertex population given ``histogram[d]``.

    Picks the degree ``t`` (among positive degrees present) splitting the
    population into ``deg < t`` and ``deg >= t`` with the smallest difference
    in total degree; ties go to the smaller ``t``.
    """
    histogram = np.asarray(histogram)
    d = np.flatnonzero(histogram)
    d = d[d > 0]
    if d.size == 0:
        raise ValueError("no vertex with positive degree")
    mass = d * histogram[d]
    total = int(mass.sum())
    below = np.concatenate([[0], np.cumsum(mass)[:-1]])
    diff = np.abs(2 * below - total)
    return int(d[np.argmin(diff)])


@dataclass(frozen=True, eq=False)
class DegreeStats:
    total_degree: int
    degree_histogram: np.ndarray
    highD0: int

    @classmethod
    def from_graph(cls, graph: Graph) -> "DegreeStats":
        deg = graph.degrees
        hist = np.bincount(deg, minlength=1).astype(np.int64)
        return cls(
            total_degree=int(deg.sum()),
            degree_histogram=_frozen(hist),
            highD0=high_degree_threshold(hist) if graph.edge_count else 0,
        )


class Preprocessed(NamedTuple):
    graph: Graph
    quantizer: WeightQuantizer
    degrees: DegreeStats
    seconds: float


def preprocess(graph: Graph, ratio_num: int = DEFAULT_RATIO_NUM) -> Preprocessed:
    """Quantize the weight distribution and gather degree statistics.

    Arcs are already weight-sorted by :class:`Graph`; this re-checks it with a
    linear scan.  The elapsed wall time is returned alongside the results.
    """
    t0 = time.perf_counter()
    if not graph.is_weight_sorted():
        graph = Graph.from_edges(graph.vertex_count, graph.edge_u, graph.edge_v, graph.edge_w)
    quantizer = WeightQuantizer.from_weights(graph.edge_w, ratio_num)
    stats = DegreeStats.from_graph(graph)
    return Preprocessed(graph, quantizer, stats, time.perf_counter() - t0)
