import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats
from scipy.optimize import brentq

from percolab.graph import build_graph, connected_components
from percolab.groups import AbelianGroup, box_graph, cayley_graph
from percolab.percolation import (McEstimate, clusters, cluster_connect_check, edge_uniforms,
                                  estimate_pc, giant_thresholds, left_right_crossing, mc_giant,
                                  quantile_pc, sample_config, set_to_set, theta_power_check,
                                  two_point)


def _path(n):
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def _complete(n):
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def _torus(*mods):
    g = AbelianGroup(mods)
    return cayley_graph(g, [tuple(int(i == j) for i in range(len(mods))) for j in range(len(mods))])


def _run_probability(n_edges, k, p):
    """P(some run of >= k consecutive open edges among n_edges), exact."""
    if k <= 0:
        return 1.0
    q = 1 - p
    pk = p ** k
    none = np.ones(n_edges + 1)
    if n_edges >= k:
        none[k] = 1 - pk
    for n in range(k + 1, n_edges + 1):
        none[n] = none[n - 1] - q * pk * none[n - k - 1]
    return 1 - none[n_edges]


def test_run_probability_oracle_small():
    # brute force over all configurations of 6 edges
    rng = [0.3, 0.6, 0.9]
    for p in rng:
        total = 0.0
        for bits in range(64):
            b = [(bits >> i) & 1 for i in range(6)]
            run = best = 0
            for x in b:
                run = run + 1 if x else 0
                best = max(best, run)
            if best >= 3:
                total += p ** sum(b) * (1 - p) ** (6 - sum(b))
        assert abs(_run_probability(6, 3, p) - total) < 1e-12


def test_sample_config_basics():
    G = _torus(10, 10)
    assert sample_config(G, 0.0, 1).num_open == 0
    assert sample_config(G, 1.0, 1).num_open == G.num_edges
    a = sample_config(G, 0.4, 5, trial=3)
    b = sample_config(G, 0.4, 5, trial=3)
    assert np.array_equal(a.open_edges, b.open_edges)
    assert not np.array_equal(a.open_edges, sample_config(G, 0.4, 5, trial=4).open_edges)
    with pytest.raises(ValueError):
        sample_config(G, 1.2, 0)
    with pytest.raises(ValueError):
        sample_config(G, -0.1, 0)


def test_open_fraction_binomial():
    G = _torus(250, 200)  # 10^5 edges
    assert G.num_edges == 100_000
    k = sample_config(G, 0.3, 11).num_open
    sd = math.sqrt(G.num_edges * 0.3 * 0.7)
    assert abs(k - 0.3 * G.num_edges) < 5 * sd


def test_uniforms_are_uniform():
    u = edge_uniforms(20000, 3)
    assert stats.kstest(u, "uniform").pvalue > 1e-4


def test_clusters_examples():
    G = _torus(6, 5)
    f = clusters(G, np.ones(G.num_edges, dtype=bool))
    assert f.max_size == G.n and f.sizes().tolist() == [G.n]
    f = clusters(G, np.zeros(G.num_edges, dtype=bool))
    assert (f.sizes() == 1).all() and f.sizes().size == G.n
    # 5 vertices: edges 0-1, 1-2, 3-4 open; 2-3 closed
    H = build_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    mask = np.zeros(H.num_edges, dtype=bool)
    for u, v in [(0, 1), (1, 2), (3, 4)]:
        mask[H.edge_index(u, v)] = True
    f = clusters(H, mask)
    assert f.sizes().tolist() == [3, 2]
    assert f.connected(0, 2) and not f.connected(2, 3)
    assert sorted(f.cluster_of(4).tolist()) == [3, 4]
    with pytest.raises(ValueError):
        clusters(H, np.ones(3, dtype=bool))


def test_clusters_match_bfs_oracle():
    rng = np.random.default_rng(0)
    for t in range(1000):
        n = int(rng.integers(1, 1001)) if t % 50 == 0 else int(rng.integers(1, 60))
        m = int(rng.integers(0, 3 * n + 1))
        edges = rng.integers(0, n, size=(m, 2))
        G = build_graph(n, edges[edges[:, 0] != edges[:, 1]])
        mask = rng.random(G.num_edges) < rng.random()
        f = clusters(G, mask)
        lab = connected_components(G, mask)
        # same partition: the map root -> label is a bijection
        pairs = set(zip(f.parent.tolist(), lab.tolist()))
        assert len(pairs) == len(set(lab.tolist())) == len(set(f.parent.tolist()))
        assert f.size.sum() == G.n
        assert np.array_equal(np.bincount(lab, minlength=n)[lab], f.size[f.parent])


def test_mc_giant_examples():
    G = _torus(8, 8)
    assert mc_giant(G, 1.0, 0.5, 20, 0).estimate == 1.0
    assert mc_giant(G, 0.0, 0.5, 20, 0).estimate == 0.0
    with pytest.raises(ValueError):
        mc_giant(G, 0.5, 0.5, 0, 0)
    with pytest.raises(ValueError):
        mc_giant(G, 0.5, 1.5, 10, 0)


def test_mc_giant_supercritical_torus():
    est = mc_giant(_torus(64, 64), 0.65, 0.5, 500, 1)
    assert est.estimate >= 0.95


def test_mc_estimate_stderr():
    e = McEstimate.from_counts(30, 100, 0)
    assert e.estimate == 0.3
    assert math.isclose(e.stderr, math.sqrt(0.3 * 0.7 / 100))
    lo, hi = e.interval(2)
    assert lo < 0.3 < hi
    assert set(e.as_row()) == {"estimate", "stderr", "trials", "seed"}


def test_thresholds_agree_with_mc_giant():
    G = _torus(12, 12)
    T = giant_thresholds(G, 0.4, 300, 9)
    for p in (0.3, 0.45, 0.5, 0.6):
        est = mc_giant(G, p, 0.4, 300, 9)
        assert est.successes == int((T < p).sum())


def test_giant_monotone_in_p():
    G = _torus(10, 10)
    ps = np.linspace(0, 1, 11)
    counts = [mc_giant(G, p, 0.5, 100, 4).successes for p in ps]
    assert counts == sorted(counts)


def test_estimate_pc_complete_graph():
    res = estimate_pc(_complete(50), 0.9, 0.5, tol=0.01, trials=100, seed=2)
    assert res.lo <= res.p <= res.hi
    assert res.p < 0.2


def test_path_pc_matches_run_length_oracle():
    n = 1000
    k = math.ceil(0.5 * n) - 1  # 500 vertices need 499 consecutive open edges
    exact = brentq(lambda p: _run_probability(n - 1, k, p) - 0.5, 0.9, 0.99999, xtol=1e-12)
    T = giant_thresholds(_path(n), 0.5, 2000, 13)
    med, lo, hi = quantile_pc(T, 0.5, level=0.999)
    assert lo <= exact <= hi
    assert abs(med - exact) < 5e-4
    res = estimate_pc(_path(n), 0.5, 0.5, tol=0.004, trials=200, seed=13)
    if res.resolved:
        assert res.lo - 0.002 <= exact <= res.hi + 0.002
    else:
        assert res.trials_needed != 0


def test_estimate_pc_monotone_in_alpha():
    G = _torus(12, 12)
    a = estimate_pc(G, 0.3, 0.5, tol=0.02, trials=200, seed=6)
    b = estimate_pc(G, 0.6, 0.5, tol=0.02, trials=200, seed=6)
    assert a.p <= b.p + 0.02


def test_estimate_pc_validation():
    G = _path(5)
    with pytest.raises(ValueError):
        estimate_pc(G, 0.5, 1.0)
    with pytest.raises(ValueError):
        estimate_pc(G, 0.5, 0.5, tol=0)


def test_estimate_pc_reports_unresolved():
    # q exactly at a probability the event takes on a wide plateau is
    # hard to bracket; a tiny trial cap forces an unresolved report
    res = estimate_pc(_torus(16, 16), 0.5, 0.5, tol=1e-4, trials=20, seed=1, max_trials=20)
    assert not res.resolved
    assert res.trials_needed != 0
    assert res.lo <= res.p <= res.hi


def test_quantile_pc_ci_contains_point():
    T = np.random.default_rng(0).random(500)
    p, lo, hi = quantile_pc(T, 0.5)
    assert lo <= p <= hi
    assert abs(p - 0.5) < 0.08


def test_two_point_examples():
    G = _torus(6, 6)
    assert two_point(G, 0.3, 4, 4, 50, 0).estimate == 1.0
    e = build_graph(2, [(0, 1)])
    est = two_point(e, 0.37, 0, 1, 4000, 3)
    assert abs(est.estimate - 0.37) < 4 * est.stderr
    with pytest.raises(ValueError):
        two_point(G, 0.3, 0, 99, 10, 0)


def test_set_to_set_contains_two_point():
    G = _torus(8, 8)
    pt = two_point(G, 0.5, 0, 27, 200, 8)
    ss = set_to_set(G, 0.5, [0], [27, 28], 200, 8)
    assert ss.successes >= pt.successes


def test_crossing_self_dual_small_box():
    G, coords = box_graph(10, 10)
    est = left_right_crossing(G, coords, 0.5, 1000, 5)
    assert abs(est.estimate - 0.5) < 0.1
    assert left_right_crossing(G, coords, 1.0, 5, 0).estimate == 1.0


def test_theta_power_examples():
    G = _torus(10, 10)
    ev = {"kind": "giant", "alpha": 0.5}
    r = theta_power_check(G, 0.55, 1.0, ev, 200, 0)
    assert r["lhs"] == r["rhs"] and r["pass"]
    r = theta_power_check(G, 1.0, 0.5, ev, 20, 0)
    assert r["lhs"] == r["rhs"] == 1.0
    r = theta_power_check(G, 0.6, 0.5, {"kind": "connect", "x": 0, "y": 55}, 300, 1)
    assert r["pass"]
    with pytest.raises(ValueError):
        theta_power_check(G, 0.6, 0.0, ev, 10, 0)
    with pytest.raises(ValueError):
        theta_power_check(G, 0.6, 0.5, {"kind": "bogus"}, 10, 0)


def test_theta_power_torus32():
    r = theta_power_check(_torus(32, 32), 0.7, 0.5, {"kind": "giant", "alpha": 0.5}, 300, 2)
    assert r["pass"]


def test_cluster_connect_markov():
    G = _torus(12, 12)
    for p in (0.45, 0.55, 0.7):
        r = cluster_connect_check(G, p, 0, 0.3, 300, 3)
        assert r["markov_ok"] and r["converse_ok"]


@given(st.integers(0, 2**31), st.floats(0.05, 0.95), st.floats(0.0, 0.3))
def test_monotone_coupling(seed, p, dp):
    G = _torus(7, 6)
    lo = sample_config(G, p, seed)
    hi = sample_config(G, min(1.0, p + dp), seed)
    assert not (lo.open_edges & ~hi.open_edges).any()
    assert clusters(G, lo).max_size <= clusters(G, hi).max_size
