"""Degree/weight statistics and the two step heuristics.

The dynamic-stepping heuristic picks the next scheduling threshold as
``ub + gap(ub)``; the traversal-optimization heuristic picks a selection
threshold ``st <= lb`` splitting settled vertices between push and pull.
Both read the :class:`StepSchedule`, which tracks the unsettled vertex set
``VS(lb) = {x : dist[x] >= lb}`` (unreached vertices included) as the step
boundary advances.
"""
from __future__ import annotations

import numpy as np

from .graph import DegreeStats, Graph, WeightQuantizer, high_degree_threshold

DEFAULT_ALPHA = 3
DEFAULT_BETA = 0.9
DEFAULT_ST_NUM = 1 << 10


# ---------------------------------------------------------------------------
# Closed-form pieces.  These accept scalars or numpy arrays.


def prob(sum_d, total_degree: int, beta: float = DEFAULT_BETA):
    if total_degree <= 0:
        raise ValueError("prob is undefined on a graph without edges")
    sum_d = np.asarray(sum_d, dtype=np.float64)
    out = np.minimum(beta, np.maximum(sum_d, total_degree - sum_d) / total_degree)
    return out if out.ndim else float(out)


def ratio(p, high_d):
    p = np.asarray(p, dtype=np.float64)
    out = 1.0 - (1.0 - p) ** (1.0 / (p * np.asarray(high_d, dtype=np.float64)))
    return out if out.ndim else float(out)


def gap(high_d: int, p: float, quantizer: WeightQuantizer, alpha: int = DEFAULT_ALPHA) -> float:
    if high_d <= alpha:
        return quantizer.max_weight
    return quantizer.max_w(ratio(p, high_d))


def pushed(lb, y, sum_d_x, sum_d_lb, max_weight: float):
    return (y - lb) * (sum_d_x - sum_d_lb) / max_weight


def pulled(x, y, sum_d_lb, max_weight: float):
    return (y - x) * sum_d_lb / max_weight


def long_relevant(pulled_value, sum_d_x, sum_d_lb, total_degree: int):
    return pulled_value * (sum_d_x - sum_d_lb) / total_degree


# ---------------------------------------------------------------------------


class StepSchedule:
    """Statistics over the unsettled set as the step boundary moves up.

    Settled vertices are appended in distance order, so ``sum_d`` can be read
    exactly for any threshold at or below the current boundary.
    """

    def __init__(
        self,
        graph: Graph,
        degrees: DegreeStats,
        quantizer: WeightQuantizer,
        alpha: int = DEFAULT_ALPHA,
        beta: float = DEFAULT_BETA,
        st_num: int = DEFAULT_ST_NUM,
    ):
        if st_num < 1:
            raise ValueError("st_num must be positive")
        self.degree = graph.degrees
        self.edge_count = graph.edge_count
        self.total_degree = degrees.total_degree
        self.quantizer = quantizer
        self.alpha = alpha
        self.beta = beta
        self.st_num = st_num

        self.boundary = 0.0
        self.unsettled_degree_sum = degrees.total_degree
        self.unsettled_degree_histogram = degrees.degree_histogram.copy()
        n = graph.vertex_count
        self._settled_dist = np.empty(n, dtype=np.float64)
        self._settled_mass = np.zeros(n + 1, dtype=np.int64)  # prefix sums of settled degrees
        self._n_settled = 0
        self._gaps: dict[float, float] = {}
        self.st0: float | None = None
        self.st1: float | None = None

    # -- bookkeeping -----------------------------------------------------

    def advance(self, new_boundary: float, dist: np.ndarray) -> np.ndarray:
        """Settle every vertex with ``boundary <= dist < new_boundary``.

        Returns the newly settled vertices in distance order.
        """
        if new_boundary < self.boundary:
            raise ValueError("step boundary cannot move down")
        idx = np.flatnonzero((dist >= self.boundary) & (dist < new_boundary))
        idx = idx[np.argsort(dist[idx], kind="stable")]
        k, j = self._n_settled, self._n_settled + idx.size
        deg = self.degree[idx]
        self._settled_dist[k:j] = dist[idx]
        self._settled_mass[k + 1 : j + 1] = self._settled_mass[k] + np.cumsum(deg)
        self._n_settled = j
        np.subtract.at(self.unsettled_degree_histogram, deg, 1)
        self.unsettled_degree_sum -= int(deg.sum())
        self.boundary = float(new_boundary)
        if self.st1 is None and self.unsettled_degree_sum <= self.edge_count:
            self.st1 = self.boundary
        return idx

    @property
    def settled_distances(self) -> np.ndarray:
        return self._settled_dist[: self._n_settled]

    def candidate_grid(self) -> np.ndarray | None:
        """The ``st_num + 1`` evenly spaced selection candidates over [st0, st1]."""
        if self.st0 is None or self.st1 is None or not self.st1 > self.st0:
            return None
        k = np.arange(self.st_num + 1, dtype=np.float64)
        return k * ((self.st1 - self.st0) / self.st_num) + self.st0

    # -- queries ---------------------------------------------------------

    def sum_d(self, x):
        """Total degree of ``VS(x)``; ``x`` may be an array of thresholds."""
        xs = np.asarray(x, dtype=np.float64)
        if np.any(xs > self.boundary):
            raise ValueError(f"sum_d queried above the current boundary {self.boundary}")
        settled = self._settled_dist[: self._n_settled]
        out = self.total_degree - self._settled_mass[np.searchsorted(settled, xs, side="left")]
        return out if out.ndim else int(out)

    def _at_boundary(self, x: float, what: str) -> None:
        if x != self.boundary:
            raise ValueError(f"{what} is only known at the current boundary {self.boundary}, not {x}")

    def high_d(self, x: float) -> int:
        self._at_boundary(x, "high_d")
        try:
            return high_degree_threshold(self.unsettled_degree_histogram)
        except ValueError:
            raise ValueError("VS(lb) has no vertex with positive degree") from None

    def prob(self, x: float) -> float:
        return prob(self.sum_d(x), self.total_degree, self.beta)

    def ratio(self, x: float) -> float:
        return ratio(self.prob(x), self.high_d(x))

    def gap(self, x: float) -> float:
        if x in self._gaps:
            return self._gaps[x]
        self._at_boundary(x, "gap")
        g = gap(self.high_d(x), self.prob(x), self.quantizer, self.alpha)
        self._gaps[x] = g
        return g


# ---------------------------------------------------------------------------
# Traversal-optimization estimates.  ``x`` may be an array of candidates.


def _clamps(x, lb, y, max_weight):
    lb0 = np.maximum(x, lb - max_weight)
    ub0 = np.minimum(y, lb + max_weight)
    ub1 = np.minimum(y, lb0 + max_weight)
    return lb0, ub0, ub1


def estimate_pushed(x, lb: float, y: float, schedule: StepSchedule, quantizer: WeightQuantizer):
    m = quantizer.max_weight
    lb0, ub0, _ = _clamps(x, lb, y, m)
    return pushed(lb, ub0, schedule.sum_d(lb0), schedule.sum_d(lb), m)


def estimate_pulled(x, lb: float, y: float, schedule: StepSchedule, quantizer: WeightQuantizer):
    m = quantizer.max_weight
    lb0, _, ub1 = _clamps(x, lb, y, m)
    return pulled(lb0, ub1, schedule.sum_d(lb), m)


def estimate_long(x, lb: float, y: float, schedule: StepSchedule, quantizer: WeightQuantizer):
    m = quantizer.max_weight
    lb0, _, _ = _clamps(x, lb, y, m)
    return long_relevant(
        estimate_pulled(x, lb, y, schedule, quantizer),
        schedule.sum_d(lb0),
        schedule.sum_d(lb),
        schedule.total_degree,
    )


def profit(x, lb: float, y: float, schedule: StepSchedule, quantizer: WeightQuantizer):
    """Edge traversals saved by pulling ``[x, lb)`` instead of pushing it."""
    return (
        estimate_pushed(x, lb, y, schedule, quantizer)
        - estimate_long(x, lb, y, schedule, quantizer)
        - estimate_pulled(x, lb, y, schedule, quantizer)
    )


def compute_st(
    lb: float,
    ub: float,
    schedule: StepSchedule,
    quantizer: WeightQuantizer,
    candidates: str = "grid",
) -> float:
    """Selection threshold for the step that follows ``<lb, ub>``.

    Expects the schedule to have been advanced to ``ub``.  ``candidates`` is
    ``"grid"`` (the evenly spaced [st0, st1] grid) or ``"exact"`` (every
    settled distance, slower; used to check the grid in tests).
    """
    m = quantizer.max_weight
    if schedule.sum_d(ub) >= schedule.edge_count or schedule.gap(lb) == m:
        return ub
    next_gap = schedule.gap(ub)
    if next_gap == m:
        return max(0.0, ub - m)
    if candidates == "grid":
        xs = schedule.candidate_grid()
    elif candidates == "exact":
        xs = np.unique(schedule.settled_distances)
    else:
        raise ValueError(f"unknown candidate mode {candidates!r}")
    if xs is None:
        return ub
    xs = xs[xs < ub]
    if xs.size == 0:
        return ub
    gains = profit(xs, ub, ub + next_gap, schedule, quantizer)
    best = int(np.argmax(gains))
    return float(xs[best]) if gains[best] > 0 else ub
