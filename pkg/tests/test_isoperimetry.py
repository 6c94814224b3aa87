import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab.graph import bfs_distances, build_graph, diameter, edge_boundary
from percolab.groups import AbelianGroup, box_graph, cayley_graph, grid_graph, heisenberg_cayley
from percolab.isoperimetry import (ball_sizes, check_sparse_boundary, csc_bound,
                                   disjoint_balls_on_geodesic, exhaustive_iso_profile,
                                   growth_profile, iso_ratio, linear_rel_growth_check,
                                   local_search_iso, net_cover, scale_detect)
from percolab.progressions import hat, sumset_power


def _cycle(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def _path(n):
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def _complete(n):
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def _torus(*mods):
    g = AbelianGroup(mods)
    return cayley_graph(g, [tuple(int(i == j) for i in range(len(mods))) for j in range(len(mods))])


def _py_min_boundary(G):
    """Plain enumeration of all subsets by size."""
    edges = [tuple(e) for e in G.edges.tolist()]
    out = [0]
    for s in range(1, G.n // 2 + 1):
        best = min(sum((u in A) != (v in A) for u, v in edges)
                   for A in map(set, itertools.combinations(range(G.n), s)))
        out.append(best)
    return out


def test_growth_examples():
    assert growth_profile(_cycle(10), 0).sizes.tolist() == [1, 3, 5, 7, 9, 10]
    assert growth_profile(_complete(6), 2).sizes.tolist() == [1, 6]
    G, coords = box_graph(2, 2)
    centre = int(np.flatnonzero((coords == 0).all(axis=1))[0])
    # graph distance from the centre of a 5x5 box reaches 4 at the corners
    assert growth_profile(G, centre).sizes.tolist() == [1, 5, 13, 21, 25]
    with pytest.raises(ValueError):
        growth_profile(build_graph(3, [(0, 1)]), 0)


def test_growth_matches_sumsets():
    for mods, gens in [((7, 5), [(1, 0), (0, 1)]), ((12,), [1, 5]), ((6, 6), [(1, 0), (1, 1)])]:
        g = AbelianGroup(mods)
        G = cayley_graph(g, gens)
        prof = growth_profile(G, 0).sizes
        A = hat(g, gens)
        for n, size in enumerate(prof):
            assert int(sumset_power(g, A, n).sum()) == size


def test_scale_detect():
    prof = growth_profile(_torus(100, 4), 0)
    # brute-force scan of the definition
    expect = max([n for n in range(1, prof.radius + 1) if prof.sizes[n] >= 0.5 * n * n], default=0)
    assert scale_detect(prof, 2, 0.5) == expect == 15
    for G in (_cycle(9), _torus(5, 7), _path(12)):
        p = growth_profile(G, 0)
        assert scale_detect(p, 1, 1) == p.radius
    assert scale_detect(prof, 2, 1e9) == 0
    with pytest.raises(ValueError):
        scale_detect(prof, 0.5, 1)


def test_csc_bound():
    prof = growth_profile(_cycle(20), 0)
    assert csc_bound(prof, 1, 5, 3) == csc_bound(prof, 1, 5, 5) == 1.0
    tor = growth_profile(_torus(64, 64), 0)
    vol = tor.sizes[10]
    assert vol == 2 * 10 * 11 + 1
    assert math.isclose(csc_bound(tor, 2, 10, 50), min(1, math.sqrt(vol) / 10) * math.sqrt(50))
    assert math.isclose(csc_bound(tor, 2, 10, 50, c=0.25), 0.25 * csc_bound(tor, 2, 10, 50))
    with pytest.raises(ValueError):
        csc_bound(tor, 2, 0, 1)
    with pytest.raises(ValueError):
        csc_bound(tor, 2, 10, int(vol))


def test_exhaustive_examples():
    for n in (6, 9, 12):
        prof = exhaustive_iso_profile(_cycle(n))
        assert prof.min_boundary[1:].tolist() == [2] * (n // 2)
    k4 = exhaustive_iso_profile(_complete(4))
    assert k4.min_boundary[2] == 4
    kn = exhaustive_iso_profile(_complete(7))
    assert kn.min_boundary[1:].tolist() == [s * (7 - s) for s in (1, 2, 3)]
    G, _ = grid_graph(4, 4)
    prof = exhaustive_iso_profile(G)
    assert prof.min_boundary[4] == 4
    w = prof.witnesses[4]
    assert w.sum() == 4 and edge_boundary(G, w)[0] == 4
    with pytest.raises(ValueError):
        exhaustive_iso_profile(_cycle(25))


def test_exhaustive_matches_plain_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(15):
        n = int(rng.integers(2, 11))
        m = int(rng.integers(0, 2 * n))
        e = rng.integers(0, n, size=(m, 2))
        G = build_graph(n, e[e[:, 0] != e[:, 1]])
        prof = exhaustive_iso_profile(G)
        assert prof.min_boundary.tolist() == _py_min_boundary(G)
        for s in range(1, n // 2 + 1):
            assert edge_boundary(G, prof.witnesses[s])[0] == prof.min_boundary[s]


def test_connected_only_is_upper_bound():
    # two disjoint triangles: the full profile has a zero at s = 3
    G = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    full = exhaustive_iso_profile(G)
    conn = exhaustive_iso_profile(G, connected_only=True)
    assert full.min_boundary[3] == 0
    assert (conn.min_boundary >= full.min_boundary).all()
    H, _ = grid_graph(3, 4)
    a = exhaustive_iso_profile(H)
    b = exhaustive_iso_profile(H, connected_only=True)
    assert (b.min_boundary >= a.min_boundary).all()


def test_local_search_examples():
    w = local_search_iso(_cycle(16), 1, seed=1)
    assert w.ratio == 2.0 and w.boundary == 2
    G, _ = grid_graph(10, 10)
    w = local_search_iso(G, 2, seed=0)
    assert w.ratio <= 10 / math.sqrt(50) + 1e-12
    assert w.ratio == iso_ratio(edge_boundary(G, w.members)[0], w.size, G.n, 2)


def test_local_search_respects_ball():
    G, coords = grid_graph(9, 9)
    w = local_search_iso(G, 2, ball_constraint=(40, 2), seed=3)
    assert (bfs_distances(G, 40)[w.members] <= 2).all()
    allowed = np.zeros(G.n, dtype=bool)
    allowed[:20] = True
    w = local_search_iso(G, 2, ball_constraint=allowed, seed=3)
    assert not (w.members & ~allowed).any()


def test_local_search_never_beats_exact():
    rng = np.random.default_rng(5)
    hits = total = 0
    for _ in range(12):
        n = int(rng.integers(6, 15))
        e = rng.integers(0, n, size=(2 * n, 2))
        G = build_graph(n, np.vstack([[(i, i + 1) for i in range(n - 1)], e[e[:, 0] != e[:, 1]]]))
        for d in (1.5, 2.0, 3.0):
            exact = exhaustive_iso_profile(G).best(d)
            w = local_search_iso(G, d, seed=int(rng.integers(1000)), iters=4000)
            assert w.ratio >= exact.ratio - 1e-9
            total += 1
            hits += w.ratio <= exact.ratio + 1e-9
    assert hits >= 0.9 * total


def test_sparse_boundary_examples():
    G = _cycle(12)
    A = np.arange(0, 12, 2)
    r = check_sparse_boundary(G, A, 1, 2 / 3)
    assert r["hypothesis_ok"] and r["conclusion_ok"]
    assert r["vertex_boundary"] == 6
    r = check_sparse_boundary(G, [0, 1, 2], 1, 0.5)
    assert not r["hypothesis_ok"] and r["witness"] in (0, 1, 2, 11, 3)
    r = check_sparse_boundary(G, [], 2, 0.5)
    assert r["hypothesis_ok"] and r["conclusion_ok"] and r["bound"] == 0
    with pytest.raises(ValueError):
        check_sparse_boundary(G, [0], 0, 0.5)


def test_sparse_boundary_exhaustive_small_transitive():
    for G in (_cycle(10), _torus(3, 4), _complete(6), _torus(2, 2, 2)):
        for r in range(1, diameter(G) + 1):
            balls = ball_sizes(G, r)
            for rho in (0.25, 0.5, 0.75):
                for bits in range(1 << G.n):
                    A = np.flatnonzero((bits >> np.arange(G.n)) & 1)
                    res = check_sparse_boundary(G, A, r, rho, balls=balls)
                    if res["hypothesis_ok"]:
                        assert res["conclusion_ok"], (G.n, r, rho, A)


def test_net_cover():
    X, ok = net_cover(_cycle(20), np.arange(20), 2)
    assert X.size == 4 and ok
    G = _torus(5, 5)
    X, ok = net_cover(G, np.arange(G.n), 10)
    assert X.size == 1 and ok
    X, ok = net_cover(G, [1, 7, 9], 0)
    assert X.tolist() == [1, 7, 9] and ok
    with pytest.raises(ValueError):
        net_cover(G, [0], -1)


def test_disjoint_balls():
    assert len(disjoint_balls_on_geodesic(_path(100), 0, 50, 2)) == 5 >= (50 - 4) / 10
    assert len(disjoint_balls_on_geodesic(_cycle(200), 0, 80, 5)) == 4 >= (80 - 10) / 22
    balls = disjoint_balls_on_geodesic(_path(30), 0, 20, 0)
    assert len(balls) >= 10
    with pytest.raises(ValueError):
        disjoint_balls_on_geodesic(_cycle(10), 0, 20, 2)
    with pytest.raises(ValueError):
        disjoint_balls_on_geodesic(_cycle(10), 0, 4, 3)


def test_linear_rel_growth_transitive():
    for G in (_cycle(40), _torus(9, 7), _torus(30, 3), heisenberg_cayley(4), _complete(5)):
        assert linear_rel_growth_check(G)["pass"]


@given(st.integers(3, 60), st.integers(0, 15), st.integers(0, 10**6))
def test_disjoint_balls_bound_on_cycles(n, m, v):
    G = _cycle(2 * n)
    ecc = n
    length = min(ecc, 2 * n)
    if 2 * m > length:
        return
    balls = disjoint_balls_on_geodesic(G, v % (2 * n), length, m)
    assert len(balls) >= (length - 2 * m) / (4 * m + 2)


@given(st.integers(2, 12), st.integers(1, 5), st.integers(0, 2**20))
def test_net_cover_properties(n, m, seed):
    G = _torus(n, n)
    rng = np.random.default_rng(seed)
    A = np.flatnonzero(rng.random(G.n) < 0.5)
    X, ok = net_cover(G, A, m)
    assert ok
    if A.size:
        for i, x in enumerate(X):
            dx = bfs_distances(G, int(x))
            assert (dx[X[i + 1:]] > 2 * m).all()
