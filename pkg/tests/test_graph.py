import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab.graph import (Graph, ball, bfs_distances, build_graph, connected_components,
                            diameter, double_cover_walk, eccentricity, edge_boundary,
                            induced_subgraph, vertex_boundary)
from percolab.groups import AbelianGroup, box_graph, cayley_graph


def cycle(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


@st.composite
def graphs(draw, max_n=14, connected=False):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    if connected:
        pairs += [(i, i + 1) for i in range(n - 1)]
    return build_graph(n, pairs)


def test_build_collapses_duplicates_and_loops():
    G = build_graph(3, [(0, 1), (1, 2), (1, 0)])
    assert G.num_edges == 2 and G.duplicates_collapsed == 1
    G = build_graph(4, [(0, 0), (0, 1)])
    assert G.num_edges == 1 and G.loops_discarded == 1
    G = build_graph(1, [])
    assert G.n == 1 and G.num_edges == 0


def test_build_rejects_out_of_range():
    with pytest.raises(ValueError):
        build_graph(3, [(0, 3)])
    with pytest.raises(ValueError):
        build_graph(3, [(-1, 0)])


def test_canonical_indexing_is_order_independent():
    a = build_graph(4, [(3, 2), (0, 1), (2, 1)])
    b = build_graph(4, [(1, 2), (1, 0), (2, 3)])
    assert a == b
    assert a.edges.tolist() == [[0, 1], [1, 2], [2, 3]]
    assert a.edge_index(2, 1) == 1 and a.edge_index(0, 3) == -1


def test_json_roundtrip():
    G = cycle(5)
    data = json.loads(G.to_json())
    assert set(data) == {"n", "edges"}
    assert Graph.from_json(G.to_json()) == G


def test_bfs_examples():
    P = build_graph(3, [(0, 1), (1, 2)])
    assert bfs_distances(P, 0).tolist() == [0, 1, 2]
    two = build_graph(4, [(0, 1), (2, 3)])
    assert bfs_distances(two, 0).tolist() == [0, 1, -1, -1]
    assert bfs_distances(cycle(4), 0).tolist() == [0, 1, 2, 1]
    with pytest.raises(ValueError):
        bfs_distances(P, 3)


def test_ball_examples():
    C = cayley_graph(AbelianGroup([10]), [1])
    assert sorted(np.flatnonzero(ball(C, 0, 2))) == [0, 1, 2, 8, 9]
    assert ball(C, 0, 5).all()
    assert np.flatnonzero(ball(C, 3, 0)).tolist() == [3]
    B, coords = box_graph(2, 2)
    o = int(np.flatnonzero((coords == 0).all(axis=1))[0])
    assert ball(B, o, 1).sum() == 5


def test_diameter_examples():
    for k in (2, 3, 7):
        assert diameter(cycle(2 * k)) == k
    K5 = build_graph(5, itertools.combinations(range(5), 2))
    assert diameter(K5) == 1
    for radii in [(1,), (2, 1), (1, 1, 2), (3, 0)]:
        assert diameter(box_graph(*radii)[0]) == 2 * sum(radii)
    with pytest.raises(ValueError):
        diameter(build_graph(2, []))


def _walk_ok(G, w):
    assert w[0] == w[-1]
    e = G.edge_index(w[:-1], w[1:])
    assert (e >= 0).all()
    counts = np.bincount(e, minlength=G.num_edges)
    return bool((counts == 2).all())


def test_double_cover_examples():
    assert double_cover_walk(build_graph(2, [(0, 1)])).tolist() == [0, 1, 0]
    tri = build_graph(3, [(0, 1), (1, 2), (0, 2)])
    w = double_cover_walk(tri)
    assert len(w) == 7 and _walk_ok(tri, w)
    P = build_graph(3, [(0, 1), (1, 2)])
    assert double_cover_walk(P).tolist() == [0, 1, 2, 1, 0]
    with pytest.raises(ValueError):
        double_cover_walk(build_graph(3, [(0, 1)]))


@given(graphs(connected=True))
def test_double_cover_property(G):
    w = double_cover_walk(G)
    if G.num_edges == 0:
        assert w.tolist() == [0]
        return
    assert _walk_ok(G, w)
    assert set(w.tolist()) == set(range(G.n))
    visits = np.bincount(w[:-1], minlength=G.n)
    assert (visits <= 2 * G.degree).all()


def test_boundary_examples():
    C4 = cycle(4)
    assert edge_boundary(C4, np.ones(4, bool))[0] == 0
    assert edge_boundary(C4, [2])[0] == 2
    assert edge_boundary(C4, [0, 1])[0] == 2
    assert not vertex_boundary(C4, range(4)).any()
    star = build_graph(5, [(0, i) for i in range(1, 5)])
    assert np.flatnonzero(vertex_boundary(star, [0])).tolist() == [1, 2, 3, 4]
    B, coords = box_graph(3, 3)
    o = int(np.flatnonzero((coords == 0).all(axis=1))[0])
    A = ball(B, o, 1)
    d = bfs_distances(B, o)
    assert np.array_equal(vertex_boundary(B, A), d == 2)


@given(graphs(), st.data())
def test_edge_boundary_dominates_vertex_boundary(G, data):
    A = np.array(data.draw(st.lists(st.booleans(), min_size=G.n, max_size=G.n)), dtype=bool)
    eb, idx = edge_boundary(G, A)
    vb = vertex_boundary(G, A)
    assert eb >= vb.sum()
    # brute force
    assert eb == sum(A[u] != A[v] for u, v in G.edges)
    assert idx.size == eb


@given(graphs(connected=True), st.integers(0, 5))
def test_balls_nested(G, n):
    o = 0
    assert (ball(G, o, n) <= ball(G, o, n + 1)).all()
    assert ball(G, o, G.n).all()


@given(graphs())
def test_bfs_triangle_inequality_along_edges(G):
    d = bfs_distances(G, 0)
    for u, v in G.edges:
        if d[u] >= 0:
            assert d[v] >= 0 and abs(d[u] - d[v]) <= 1


def test_transitive_diameter_equals_eccentricity():
    for mods, gens in [([5, 3], [(1, 0), (0, 1)]), ([12], [1, 5]), ([4, 4, 2], [(1, 0, 0), (0, 1, 0), (0, 0, 1)])]:
        G = cayley_graph(AbelianGroup(mods), gens)
        assert diameter(G) == eccentricity(G, 0)


def test_components_and_induced():
    G = build_graph(5, [(0, 1), (1, 2), (3, 4)])
    assert connected_components(G).tolist() == [0, 0, 0, 3, 3]
    assert connected_components(G, np.array([True, False, True])).tolist() == [0, 0, 2, 3, 3]
    H, old = induced_subgraph(G, [1, 2, 3])
    assert old.tolist() == [1, 2, 3] and H.edges.tolist() == [[0, 1]]


def test_graph_is_immutable():
    G = cycle(4)
    with pytest.raises(ValueError):
        G.edges[0, 0] = 3
    with pytest.raises(ValueError):
        G.indices[0] = 3
