from __future__ import annotations

import numpy as np
import pytest

from eic_sssp.generators import GenSpec, generate
from eic_sssp.graph import Graph


def t1_graph() -> Graph:
    # path 0-1-2-3 with unit weights plus a 2.5 shortcut 0-2
    return Graph.from_edges(4, [0, 1, 2, 0], [1, 2, 3, 2], [1.0, 1.0, 1.0, 2.5])


@pytest.fixture
def t1() -> Graph:
    return t1_graph()


def small_suite() -> list[tuple[str, Graph]]:
    """A spread of small graphs: generated, variant weights, and hand-made."""
    out = [("t1", t1_graph())]
    for kind in ("rmat", "urand", "grid"):
        for scale, ef in ((5, 4), (7, 8)):
            g = generate(GenSpec(kind, scale, ef, seed=scale * 31 + ef))
            out.append((f"{kind}-s{scale}-e{ef}", g))
    base = generate(GenSpec("rmat", 7, 8, seed=11))
    from eic_sssp.generators import converge_weights, discretize_weights

    out.append(("rmat-p1", discretize_weights(base, 1)))
    out.append(("rmat-p3", discretize_weights(base, 3)))
    out.append(("rmat-v2", converge_weights(base, 0.2)))
    # star and path: extreme degree profiles
    out.append(("star", Graph.from_edges(9, np.zeros(8, int), np.arange(1, 9), np.linspace(0.2, 1, 8))))
    out.append(("path", Graph.from_edges(12, np.arange(11), np.arange(1, 12), np.full(11, 0.5))))
    return out


def first_nonzero_degree(g: Graph) -> int:
    return int(np.flatnonzero(g.degrees)[0])


# acceptance criteria append "(number, line)" here; printed after the run
ACCEPTANCE_LINES: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
