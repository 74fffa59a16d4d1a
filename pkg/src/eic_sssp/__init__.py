"""Parallel single-source shortest paths with edge-indexed step scheduling."""
from __future__ import annotations

from .graph import (
    DegreeStats,
    Graph,
    GraphFormatError,
    GraphValidationError,
    Preprocessed,
    WeightQuantizer,
    load_graph,
    preprocess,
    store_graph,
)
from .solver import RunMetrics, SolveResult, SolverConfig, classify_edges, solve

__all__ = [
    "DegreeStats",
    "Graph",
    "GraphFormatError",
    "GraphValidationError",
    "Preprocessed",
    "RunMetrics",
    "SolveResult",
    "SolverConfig",
    "WeightQuantizer",
    "classify_edges",
    "load_graph",
    "preprocess",
    "solve",
    "store_graph",
]
