"""Synthetic graphs and edge-weight variants.

``rmat`` follows the Graph500 Kronecker recursion (default quadrant
probabilities 0.57/0.19/0.19/0.05, vertex labels scrambled), ``urand`` draws
both endpoints uniformly, and ``grid`` is a 2-D lattice used as a
high-diameter, road-like input.  Weights are uniform in (0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph

KINDS = ("rmat", "urand", "grid")
POWERS = (1, 2, 3, 4, 6, 8, 10)
PIVOTS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

_MAX_SCALE = 62


@dataclass(frozen=True)
class GenSpec:
    kind: str = "rmat"
    scale: int = 10
    edge_factor: int = 16
    seed: int = 0
    a: float = 0.57
    b: float = 0.19
    c: float = 0.19
    d: float = 0.05

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.scale < 1:
            raise ValueError("scale must be at least 1")
        if self.scale > _MAX_SCALE:
            raise ValueError(f"2**{self.scale} vertices overflows 64-bit vertex ids")
        if self.edge_factor < 1:
            raise ValueError("edge_factor must be at least 1")
        probs = (self.a, self.b, self.c, self.d)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"quadrant probabilities must be nonnegative and sum to 1, got {probs}")

    @property
    def vertex_count(self) -> int:
        return 1 << self.scale


def _uniform_weights(rng: np.random.Generator, m: int) -> np.ndarray:
    # random() is in [0, 1); flip it onto (0, 1]
    return 1.0 - rng.random(m)


def _rmat_endpoints(spec: GenSpec, rng: np.random.Generator, m: int):
    u = np.zeros(m, dtype=np.int64)
    v = np.zeros(m, dtype=np.int64)
    ab = spec.a + spec.b
    abc = ab + spec.c
    for bit in range(spec.scale):
        r = rng.random(m)
        u |= (r >= ab).astype(np.int64) << bit
        v |= (((r >= spec.a) & (r < ab)) | (r >= abc)).astype(np.int64) << bit
    perm = rng.permutation(spec.vertex_count)
    return perm[u], perm[v]


def _grid_edges(scale: int):
    rows = 1 << (scale // 2)
    cols = 1 << (scale - scale // 2)
    ids = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    u = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    v = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    return u, v


def generate(spec: GenSpec) -> Graph:
    rng = np.random.default_rng(spec.seed)
    n = spec.vertex_count
    if spec.kind == "grid":
        u, v = _grid_edges(spec.scale)
        w = 1.0 - 0.5 * rng.random(u.size)
        return Graph.from_edges(n, u, v, w)
    m = spec.edge_factor * n
    if spec.kind == "rmat":
        u, v = _rmat_endpoints(spec, rng, m)
    else:
        u = rng.integers(0, n, m)
        v = rng.integers(0, n, m)
    return Graph.from_edges(n, u, v, _uniform_weights(rng, m))


def _unit_weights(graph: Graph) -> np.ndarray:
    w = graph.edge_w
    if w.size and (w.min() <= 0 or w.max() > 1):
        raise ValueError("weight transforms expect weights in (0, 1]")
    return w


def discretize(x, power: int):
    """Raw integer mapping 1 + x * (2**power - 2), before rounding."""
    return 1.0 + np.asarray(x, dtype=np.float64) * (2.0**power - 2.0)


def converge(x, pivot: float):
    """Bell-shaped remapping of (0, 1] weights peaking at ``pivot``."""
    x = np.asarray(x, dtype=np.float64)
    sq = (1.0 - 2.0 * x) ** 2
    out = np.where(x <= 0.5, pivot - pivot * sq, pivot + (1.0 - pivot) * sq)
    return out if out.ndim else float(out)


def discretize_weights(graph: Graph, power: int) -> Graph:
    if power < 1:
        raise ValueError("power must be at least 1")
    raw = discretize(_unit_weights(graph), power)
    w = np.clip(np.floor(raw + 0.5), 1, 2**power - 1)
    return graph.with_weights(w)


def converge_weights(graph: Graph, pivot: float) -> Graph:
    if not 0.0 < pivot < 1.0:
        raise ValueError("pivot must lie in (0, 1)")
    w = converge(_unit_weights(graph), pivot)
    return graph.with_weights(np.maximum(w, np.finfo(np.float64).tiny))
