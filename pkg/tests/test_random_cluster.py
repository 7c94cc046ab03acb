import itertools

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from gibbslab.exact import CapExceeded, enumerate_measure, total_variation
from gibbslab.lattice import ModelParams, dobrushin_bc, free_bc, make_box, quadrant_bc, random_bc
from gibbslab.random_cluster import (
    Graph, WiredBoundary, cluster_functional_fA, cluster_functional_literal, es_spin_marginal, rc_conditional,
    rc_measure, read_edge_list, verify_es_identity, view_from_edges, wired_graph, write_edge_list,
)


def test_single_edge_closed_form():
    for q in (1.0, 2.0, 3.5):
        for p in (0.0, 0.3, 1.0):
            mu = rc_measure(Graph(2, [(0, 1)], p), q)
            expected = p / (p + (1 - p) * q)
            assert mu.prob(mu.view.open[:, 0]) == pytest.approx(expected, abs=1e-14)


def test_q_one_is_bernoulli_percolation():
    g = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [0.2, 0.4, 0.6, 0.8])
    mu = rc_measure(g, 1.0)
    for e in range(4):
        assert mu.prob(mu.view.open[:, e]) == pytest.approx(g.p[e], abs=1e-14)


def test_triangle_brute_force():
    g = Graph(3, [(0, 1), (1, 2), (0, 2)], 0.4)
    q = 2.5
    w = {}
    for bits in itertools.product([0, 1], repeat=3):
        k = 3 - sum(bits) if sum(bits) < 2 else 1
        w[bits[::-1]] = 0.4 ** sum(bits) * 0.6 ** (3 - sum(bits)) * q**k
    total = sum(w.values())
    mu = rc_measure(g, q)
    for idx, row in enumerate(mu.view.open.astype(int)):
        assert mu.weights[idx] == pytest.approx(w[tuple(row[::-1])] / total, abs=1e-14)


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(2, [(0, 0)], 0.5)
    with pytest.raises(ValueError):
        Graph(2, [(0, 1), (1, 0)], 0.5)
    with pytest.raises(ValueError):
        Graph(2, [(0, 1)], 1.5)
    with pytest.raises(ValueError):
        WiredBoundary({1: (0, 1), 2: (1,)})
    with pytest.raises(CapExceeded):
        rc_measure(Graph(10, [(i, j) for i in range(10) for j in range(i + 1, 10)], 0.5), 2.0, cap=2**20)


def test_edge_list_round_trip(tmp_path):
    g = Graph(5, [(0, 1), (1, 4), (2, 3)], [0.1, 0.25, 0.9])
    write_edge_list(g, tmp_path / "g.txt")
    h = read_edge_list(tmp_path / "g.txt")
    assert h.n_vertices == 5
    assert np.array_equal(h.edges, g.edges) and np.array_equal(h.p, g.p)


def test_cluster_view_queries():
    g = Graph(4, [(0, 1), (1, 2), (2, 3)], 0.5)
    v = view_from_edges(g, [True, False, True])
    assert v.n_clusters()[0] == 2
    assert v.connected(0, [1])[0] and not v.connected(0, [3])[0]
    assert list(v.cluster_edges([3])[0]) == [False, False, True]
    assert not v.disconnected(WiredBoundary({1: (0,), 2: (1,)}))[0]
    assert v.disconnected(WiredBoundary({1: (0,), 2: (3,)}))[0]


def test_rc_conditional_keeps_colours_apart():
    g = Graph(3, [(0, 1), (1, 2)], 0.5)
    wiring = WiredBoundary({1: (0,), 2: (2,)})
    both = lambda v: (v.open[:, 0] & v.open[:, 1]).astype(float)  # noqa: E731
    fg, f, _ = rc_conditional(g, 2.0, None, wiring, both, lambda v: np.ones(len(v)))
    assert fg == 0.0 and f == 0.0


def test_wired_graph_merges_parallel_edges():
    box = make_box(2, [(0, 0), (0, 0)])
    params = ModelParams(3, 0.7)
    graph, wiring = wired_graph(box, quadrant_bc(box, (1, 1, 1, 2)), params)
    assert graph.n_vertices == 3 and graph.n_edges == 2
    assert sorted(graph.p) == pytest.approx(sorted([-np.expm1(-0.7), -np.expm1(-2.1)]))
    assert wiring.colors == [1, 2]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), q=st.integers(2, 3), beta=st.floats(0.05, 2.5))
def test_es_marginal_equals_potts(seed, q, beta):
    rng = np.random.default_rng(seed)
    box = make_box(2, [(0, 1), (0, 2)])
    bc = random_bc(box, q, rng)
    p = ModelParams(q, beta)
    assert total_variation(es_spin_marginal(box, bc, p), enumerate_measure(box, bc, p)) < 1e-12


def test_es_identity_joint_functional():
    box = make_box(2, [(0, 1), (0, 1)])
    p = ModelParams(3, 1.1)
    for bc in (free_bc(box), dobrushin_bc(box, axis=1, height=1, colors=(1, 2)), quadrant_bc(box, (1, 2, 3, 2))):
        r = verify_es_identity(box, bc, p, [(0, 0)], [(1, 1)], 1, 2)
        assert r.rhs == pytest.approx(r.lhs, abs=1e-13)


def test_product_form_fails_on_shared_free_cluster():
    # free bc: every cluster is free, so E[f_A f_B] = q^-2 whatever the bond law,
    # while ferromagnetic coupling pushes P(a=1, b=2) strictly below q^-2
    box = make_box(1, [(0, 1)])
    p = ModelParams(3, 1.0)
    r = verify_es_identity(box, free_bc(box), p, [(0,)], [(1,)], 1, 2)
    assert r.product_form == pytest.approx(1 / 9, abs=1e-14)
    assert r.lhs == pytest.approx(r.rhs, abs=1e-14)
    assert r.lhs < r.product_form - 1e-3


def test_literal_subset_sum_differs_from_contraction():
    box = make_box(1, [(0, 0)])
    bc = dobrushin_bc(box, axis=0, height=0, colors=(1, 2))
    params = ModelParams(3, 1.0)
    graph, wiring = wired_graph(box, bc, params)
    mu = rc_measure(graph, 3.0)
    v = mu.view
    fa = cluster_functional_fA(v, [0], 1, wiring, 3)
    lit = cluster_functional_literal(v, [0], 1, wiring, 3)
    cond = v.disconnected(wiring)
    tied_to_other = cond & v.connected(0, wiring.vertices(2))
    assert tied_to_other.any()
    assert np.allclose(fa[cond & ~tied_to_other], lit[cond & ~tied_to_other])
    assert np.all(fa[tied_to_other] == 0) and np.all(lit[tied_to_other] > 0)
