from __future__ import annotations

import itertools
import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eic_sssp import _kernels
from eic_sssp import solver as S
from eic_sssp.generators import GenSpec, discretize_weights, generate
from eic_sssp.graph import Graph, preprocess
from eic_sssp.reference import dijkstra, relevant_coverage

from conftest import small_suite, t1_graph


def assert_parent_tree(g: Graph, dist, parent, source, rtol=1e-12):
    assert parent[source] == source and dist[source] == 0
    for v in np.flatnonzero(np.isfinite(dist)):
        if v == source:
            continue
        u = parent[v]
        nbrs, ws = g.neighbors(u)
        cand = dist[u] + ws[nbrs == v]
        assert cand.size, f"no arc {u}->{v}"
        assert np.any(np.abs(cand - dist[v]) <= rtol * dist[v]), (u, v)
    unreached = ~np.isfinite(dist)
    assert np.all(parent[unreached] == -1)


def assert_oracle(g, dist, source):
    want = dijkstra(g, source).dist
    assert np.array_equal(np.isinf(dist), np.isinf(want))
    fin = np.isfinite(want)
    np.testing.assert_allclose(dist[fin], want[fin], rtol=1e-12, atol=0)


# -- primitives -----------------------------------------------------------


def test_relax_min_examples():
    s = S.SsspState(3, 0)
    assert s.relax_min(1, 3.0, 0)
    assert s.dist[1] == 3.0 and s.parent[1] == 0
    assert not s.relax_min(1, 3.0, 2)
    assert s.parent[1] == 0
    assert s.relax_min(1, 2.0, 2)


@pytest.mark.parametrize("order", list(itertools.permutations([(2.0, 1), (3.0, 2), (2.5, 0)])))
def test_relax_min_any_order(order):
    s = S.SsspState(3, 0)
    for d, p in order:
        s.relax_min(1, d, p)
    assert s.dist[1] == 2.0 and s.parent[1] == 1


def test_relax_min_concurrent():
    s = S.SsspState(64, 0)
    rng = np.random.default_rng(0)
    offers = rng.random((8, 2000)) + 1
    targets = rng.integers(1, 64, (8, 2000))

    def hammer(i):
        for d, v in zip(offers[i], targets[i]):
            s.relax_min(int(v), float(d), i + 1)

    threads = [threading.Thread(target=hammer, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for v in range(1, 64):
        hits = offers[targets == v]
        assert s.dist[v] == hits.min()
        row = np.argwhere((targets == v) & (offers == hits.min()))[0][0]
        assert s.parent[v] == row + 1


def test_frontier_insert_idempotent():
    f = S.FrontierSet(10)
    S.frontier_insert(f, 3)
    S.frontier_insert(f, 3)
    assert len(f) == 1
    S.frontier_insert(f, 1)
    assert 1 in f and 3 in f and len(f) == 2
    assert list(f.drain()) == [1, 3]
    assert len(f) == 0 and 3 not in f


def test_frontier_concurrent_inserts():
    f = S.FrontierSet(100)
    barrier = threading.Barrier(8)

    def worker():
        barrier.wait()
        for v in range(100):
            f.insert(v)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert list(f.drain()) == list(range(100))


def test_config_validation():
    for bad in (dict(workers=0), dict(fused=0), dict(beta=1.0), dict(beta=0.0)):
        with pytest.raises(ValueError):
            S.SolverConfig(**bad)


# -- compiled kernels against plain-Python equivalents ----------------------


def py_push_select(g, dist, parent, paths, lb, ub):
    out, selected, skipped = [], 0, 0
    for u in paths:
        for v, w in zip(*g.neighbors(u)):
            if lb <= dist[u] + w < ub:
                selected += 1
                if v == parent[u]:
                    skipped += 1
                elif dist[u] + w < dist[v]:
                    out.append((int(v), dist[u] + w, int(u)))
    return out, selected, skipped


@pytest.mark.parametrize("seed", range(5))
def test_push_select_matches_python(seed):
    g = generate(GenSpec("urand", 6, 8, seed=seed))
    rng = np.random.default_rng(seed)
    dist = np.where(rng.random(g.vertex_count) < 0.3, np.inf, rng.random(g.vertex_count) * 3)
    parent = rng.integers(-1, g.vertex_count, g.vertex_count)
    paths = np.flatnonzero(np.isfinite(dist))
    lb, ub = 1.0, 2.2
    v, d, u, sel, skip = _kernels.push_select(g.offsets, g.arc_targets, g.arc_weights, dist, parent, paths, lb, ub)
    want, wsel, wskip = py_push_select(g, dist, parent, paths, lb, ub)
    assert (sel, skip) == (wsel, wskip)
    assert list(zip(v.tolist(), d.tolist(), u.tolist())) == want


candidate_lists = st.lists(st.tuples(st.integers(0, 9), st.floats(0.1, 5.0), st.integers(0, 9)), max_size=40)


def as_arrays(cands):
    return (
        np.array([c[0] for c in cands], dtype=np.int64),
        np.array([c[1] for c in cands], dtype=np.float64),
        np.array([c[2] for c in cands], dtype=np.int64),
    )


@settings(max_examples=100, deadline=None)
@given(candidate_lists)
def test_apply_candidates_matches_relax_min(cands):
    state = S.SsspState(10, 0)
    dist, parent = state.dist.copy(), state.parent.copy()
    cv, cd, cu = as_arrays(cands)
    in_next = np.zeros(10, dtype=bool)
    new, successes = _kernels.apply_candidates(
        dist, parent, cv, cd, cu, np.array([0]), np.array([cv.size]), in_next
    )
    frontier = S.FrontierSet(10)
    count = 0
    for v, d, u in cands:
        if state.relax_min(v, d, u):
            count += 1
            frontier.insert(v)
    assert successes == count
    np.testing.assert_array_equal(dist, state.dist)
    np.testing.assert_array_equal(parent, state.parent)
    assert new.tolist() == frontier.drain().tolist()


@settings(max_examples=100, deadline=None)
@given(candidate_lists, st.lists(st.integers(1, 9), max_size=3, unique=True))
def test_bucket_by_owner_stable(cands, cuts):
    bounds = np.array([0, *sorted(cuts), 10], dtype=np.int64)
    cv, cd, cu = as_arrays(cands)
    v, d, u, counts = _kernels.bucket_by_owner(cv, cd, cu, bounds)
    assert counts.sum() == cv.size
    start = 0
    for k, c in enumerate(counts):
        want = [x for x in cands if bounds[k] <= x[0] < bounds[k + 1]]
        got = list(zip(v[start:start + c].tolist(), d[start:start + c].tolist(), u[start:start + c].tolist()))
        assert got == want
        start += c


def test_pull_scan_matches_python():
    g = generate(GenSpec("rmat", 6, 8, seed=3))
    rng = np.random.default_rng(1)
    dist = rng.random(g.vertex_count) * 4
    parent = np.full(g.vertex_count, -1)
    st_, lb, ub = 1.0, 2.0, 2.7
    vertices = np.flatnonzero(dist > lb)
    got_d, got_p = dist.copy(), parent.copy()
    counts = _kernels.pull_scan(g.offsets, g.arc_targets, g.arc_weights, got_d, got_p, vertices, st_, lb, ub)
    scanned = attempts = successes = 0
    for u in vertices:
        for v, w in zip(*g.neighbors(u)):
            if not w < ub - st_:
                break
            scanned += 1
            if st_ <= dist[v] < lb and dist[v] + w < ub:
                attempts += 1
                if dist[v] + w < dist[u]:
                    dist[u], parent[u] = dist[v] + w, v
                    successes += 1
    assert counts == (scanned, attempts, successes)
    np.testing.assert_array_equal(got_d, dist)
    np.testing.assert_array_equal(got_p, parent)


# -- frontier initialisation ----------------------------------------------


def test_init_frontiers_first_step():
    g = t1_graph()
    p = preprocess(g)
    state = S.SsspState(4, 0)
    m = S.RunMetrics()
    assert list(S.init_frontiers(p, state, m)) == [0]
    assert m.traversals == 0 and m.synchronizations == 0


def test_init_frontiers_t1_pull():
    # settled {0, 1}; the step <lb=2, ub=3> with st=1 pulls 2 from 1
    g = t1_graph()
    p = preprocess(g)
    state = S.SsspState(4, 0)
    state.dist[:] = [0.0, 1.0, 2.5, np.inf]
    state.parent[:] = [0, 0, 0, -1]
    state.st, state.lb, state.ub = 1.0, 2.0, 3.0
    m = S.RunMetrics()
    frontier = S.init_frontiers(p, state, m)
    assert state.dist[2] == 2.0 and state.parent[2] == 1
    # vertex 2 scans (2,1,1) and (2,3,1); vertex 3 scans (3,2,1)
    assert m.traversals == 3
    assert m.relax_attempts == 1 and m.relax_successes == 1
    assert list(frontier) == [0, 1, 2]


def test_init_frontiers_push_only_scans_nothing():
    g = t1_graph()
    p = preprocess(g)
    state = S.SsspState(4, 0)
    state.dist[:] = [0.0, 1.0, 2.5, np.inf]
    state.st = state.lb = 2.0
    state.ub = 3.0
    m = S.RunMetrics()
    S.init_frontiers(p, state, m)
    assert m.traversals == 0
    assert state.dist[2] == 2.5


# -- steps ----------------------------------------------------------------


def test_isolated_source():
    g = Graph.from_edges(3, [1], [2], [1.0])
    r = S.solve(g, 0)
    assert r.dist[0] == 0 and np.all(np.isinf(r.dist[1:]))
    assert r.metrics.rounds == 0 and r.metrics.extended_paths == 0


def test_empty_graph():
    r = S.solve(Graph.from_edges(1, [], [], []), 0)
    assert list(r.dist) == [0.0]


def test_source_out_of_range():
    with pytest.raises(ValueError):
        S.solve(t1_graph(), 4)


def test_t1_solution():
    g = t1_graph()
    r = S.solve(g, 0)
    assert list(r.dist) == [0, 1, 2, 3]
    assert list(r.parent) == [0, 0, 1, 2]
    assert_parent_tree(g, r.dist, r.parent, 0)


def test_t1_single_wide_step():
    r = S.solve(t1_graph(), 0, S.SolverConfig(alpha=100))
    assert list(r.dist) == [0, 1, 2, 3]


def test_star_extends_only_the_center():
    k = 7
    g = Graph.from_edges(k + 1, np.zeros(k, int), np.arange(1, k + 1), np.ones(k))
    r = S.solve(g, 0)
    assert r.metrics.extended_paths == 1
    assert np.all(r.dist[1:] == 1)


def test_leaf_source_is_extended():
    g = Graph.from_edges(3, [0, 1], [1, 2], [1.0, 1.0])
    r = S.solve(g, 0)
    assert list(r.dist) == [0, 1, 2]
    assert r.metrics.extended_paths >= 1


@pytest.mark.parametrize("name,g", small_suite())
def test_matches_oracle_from_several_sources(name, g):
    for s in np.flatnonzero(g.degrees)[:: max(1, g.vertex_count // 5)]:
        r = S.solve(g, int(s))
        assert_oracle(g, r.dist, int(s))
        assert_parent_tree(g, r.dist, r.parent, int(s))
        m = r.metrics
        assert m.relax_successes <= m.relax_attempts <= m.traversals


def test_disconnected_components():
    g = Graph.from_edges(6, [0, 1, 3, 4], [1, 2, 4, 5], [1.0, 2.0, 1.0, 1.0])
    r = S.solve(g, 0)
    assert list(r.dist[:3]) == [0, 1, 3]
    assert np.all(np.isinf(r.dist[3:]))
    assert np.all(r.parent[3:] == -1)


def test_self_loops_and_multi_edges():
    g = Graph.from_edges(3, [0, 0, 0, 1, 1], [0, 1, 1, 1, 2], [0.5, 2.0, 1.0, 0.1, 4.0])
    r = S.solve(g, 0)
    assert list(r.dist) == [0, 1, 5]


@pytest.mark.parametrize("name,g", small_suite())
def test_step_invariants(name, g):
    """Final below lb at each step, increasing lb, bounded gaps, covered bands."""
    src = int(np.argmax(g.degrees))
    true = dijkstra(g, src).dist
    events = []
    r = S.solve(g, src, on_step=events.append)
    max_w = g.max_weight
    assert events
    lbs = [e.lb for e in events]
    assert all(a < b for a, b in zip(lbs, lbs[1:]))
    for e in events:
        assert e.st <= e.lb < e.ub
        final = true < e.ub
        np.testing.assert_allclose(e.dist[final], true[final], rtol=1e-12)
        # nothing outside the settled set is below ub
        assert np.all(e.dist[~final] >= e.ub)
        if math.isfinite(e.ub):
            assert relevant_coverage(g, src, true, e.lb, e.ub).size == 0
    for e in events[1:]:
        assert 0 < e.ub - e.lb <= max_w * (1 + 1e-12)
    assert_oracle(g, r.dist, src)


def test_monotone_counters():
    g = generate(GenSpec("rmat", 9, 8, seed=1))
    seen = []
    S.solve(g, int(np.argmax(g.degrees)), on_step=lambda e: seen.append(e.index))
    assert seen == list(range(1, len(seen) + 1))


def test_fused_counting_reduces_synchronizations():
    g = generate(GenSpec("grid", 10, 1, seed=3))
    a = S.solve(g, 0, S.SolverConfig(fused=1))
    b = S.solve(g, 0, S.SolverConfig(fused=256))
    np.testing.assert_array_equal(a.dist, b.dist)
    assert a.metrics.rounds == b.metrics.rounds
    assert b.metrics.synchronizations <= a.metrics.synchronizations


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_anything(monkeypatch, workers):
    # force chunking even on small inputs
    monkeypatch.setattr(S, "_MIN_CHUNK", 1)
    g = discretize_weights(generate(GenSpec("rmat", 10, 8, seed=9)), 4)
    src = int(np.argmax(g.degrees))
    a = S.solve(g, src, S.SolverConfig(workers=1))
    b = S.solve(g, src, S.SolverConfig(workers=workers))
    assert a.dist.tobytes() == b.dist.tobytes()
    np.testing.assert_array_equal(a.parent, b.parent)
    assert a.metrics == b.metrics


def test_worker_pool_split_and_owners():
    pool = S.WorkerPool(4, 100_000)
    items = np.arange(50_000)
    parts = pool.split(items)
    assert len(parts) == 4
    np.testing.assert_array_equal(np.concatenate(parts), items)
    bounds = pool.owner_bounds(50_000)
    assert bounds[0] == 0 and bounds[-1] == 100_000 and bounds.size == 5
    assert np.all(np.diff(bounds) > 0)
    assert list(pool.owner_bounds(10)) == [0, 100_000]
    pool.close()


def test_preprocessed_input_reused():
    g = generate(GenSpec("urand", 8, 4, seed=1))
    p = preprocess(g)
    a = S.solve(p, 3)
    b = S.solve(g, 3)
    np.testing.assert_array_equal(a.dist, b.dist)


# -- classification ---------------------------------------------------------


def test_classify_examples():
    # arcs 0->1 (w 1.2), 0->2 (w 1.1), 2->3 (w 0.1)
    g = Graph.from_edges(4, [0, 0, 2], [1, 2, 3], [1.2, 1.1, 0.1])
    true = np.array([0.0, 0.5, 1.1, 1.2])
    # pretend lsp(1) = 0.5 while 0->1 is indexed: the arc is irrelevant
    codes = S.classify_edges(g, true, 1.0, 2.0)
    arcs = {(int(u), int(v)): c for u in range(4) for v, c in zip(g.neighbors(u)[0], codes[g.offsets[u]: g.offsets[u + 1]])}
    assert arcs[(0, 1)] == S.IRRELEVANT
    assert arcs[(0, 2)] == S.LONG_RELEVANT
    assert arcs[(2, 3)] == S.SHORT_RELEVANT
    # 1 -> 0: 0.5 + 1.2 = 1.7 is indexed, both ends below lb
    assert arcs[(1, 0)] == S.IRRELEVANT
    # 3 -> 2: 1.3 is indexed, u above lb
    assert arcs[(3, 2)] == S.SHORT_RELEVANT
    codes = S.classify_edges(g, true, 5.0, 6.0)
    assert np.all(codes == S.UNINDEXED)
