import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from percolab.graph import ball, build_graph, diameter
from percolab.groups import (AbelianGroup, HeisenbergGroup, box_graph, box_product_embedding,
                             cayley_graph, central_box_embedding, elongated_torus, generates,
                             heisenberg_cayley, quotient_graph, snake_hamiltonian, symmetrize,
                             word_ball)
from percolab.progressions import hat, sumset_power


def test_abelian_coordinates_roundtrip():
    g = AbelianGroup([5, 3])
    assert g.order == 15
    for i in range(g.order):
        assert g.index(g.element(i)) == i
    a, b = g.index((4, 2)), g.index((3, 2))
    assert g.element(g.mul(a, b)) == (2, 1)
    assert g.element(g.inv(a)) == (1, 1)


def test_cayley_examples():
    C6 = cayley_graph(AbelianGroup([6]), [1])
    assert C6.num_edges == 6 and (C6.degree == 2).all()
    T = cayley_graph(AbelianGroup([5, 3]), [(1, 0), (0, 1)])
    assert T.n == 15 and (T.degree == 4).all()
    # 2 + 1: the Z_3 factor contributes at most 1, Z_5 at most 2
    assert diameter(T) == 3
    Z4 = cayley_graph(AbelianGroup([4]), [1, 2])
    assert (Z4.degree == 3).all() and diameter(Z4) == 1


def test_cayley_requires_generating():
    with pytest.raises(ValueError):
        cayley_graph(AbelianGroup([6]), [2])
    G = cayley_graph(AbelianGroup([6]), [2], require_generating=False)
    assert G.num_edges == 6  # two triangles
    assert not generates(AbelianGroup([4, 2]), [(1, 0)])


def test_box_examples():
    G, c = box_graph(1, 1)
    assert (G.n, G.num_edges) == (9, 12)
    P, _ = box_graph(4)
    assert P.n == 9 and P.num_edges == 8
    G, _ = box_graph(2, 1)
    assert G.n == 15 and diameter(G) == 6


def test_elongated_torus_examples():
    G = elongated_torus(3, 3)
    assert (G.n, G.num_edges) == (9, 18)
    C = elongated_torus(7, 1)
    assert C.num_edges == 7 and (C.degree == 2).all()
    G = elongated_torus(8, 4)
    assert G.n == 32 and diameter(G) == 6


def test_heisenberg():
    assert heisenberg_cayley(2).n == 8
    G = heisenberg_cayley(3)
    assert G.n == 27 and (G.degree == 4).all()
    h = HeisenbergGroup(3)
    a, b = h.standard_generators()
    assert h.element(h.commutator(a, b)) in {(0, 0, 1), (0, 0, 2)}
    assert h.commutator(a, b) != 0
    # multiplication law
    x, y = h.index((1, 2, 0)), h.index((2, 1, 1))
    assert h.element(h.mul(x, y)) == ((1 + 2) % 3, (2 + 1) % 3, (0 + 1 + 1 * 1) % 3)
    for e in range(h.order):
        assert h.mul(e, h.inv(e)) == 0


def _is_automorphism(G, perm):
    img = np.sort(perm[G.edges], axis=1)
    return build_graph(G.n, img) == G


@pytest.mark.parametrize("group,gens", [
    (AbelianGroup([5, 3]), [(1, 0), (0, 1)]),
    (AbelianGroup([12]), [1, 5]),
    (HeisenbergGroup(3), None),
])
def test_cayley_vertex_transitive(group, gens):
    if gens is None:
        gens = group.standard_generators()
    G = cayley_graph(group, gens)
    rng = np.random.default_rng(0)
    for g in rng.integers(0, group.order, 10):
        # left multiplication x -> g x is an automorphism of the right Cayley graph
        perm = np.atleast_1d(group.mul(int(g), np.arange(group.order)))
        assert _is_automorphism(G, perm)


@given(st.lists(st.integers(2, 9), min_size=1, max_size=3), st.integers(0, 4), st.data())
def test_ball_matches_sumset(mods, n, data):
    g = AbelianGroup(mods)
    gens = [tuple(np.eye(len(mods), dtype=int)[i]) for i in range(len(mods))]
    extra = data.draw(st.lists(st.integers(0, g.order - 1), max_size=2))
    gens = gens + [g.element(e) for e in extra]
    G = cayley_graph(g, gens)
    A = hat(g, g.as_indices(gens))
    assert np.array_equal(ball(G, 0, n), sumset_power(g, A, n))
    assert np.array_equal(ball(G, 0, n), word_ball(g, gens, n))


def test_heisenberg_ball_matches_word_ball():
    h = HeisenbergGroup(4)
    G = cayley_graph(h, h.standard_generators())
    for n in range(6):
        assert np.array_equal(ball(G, 0, n), word_ball(h, h.standard_generators(), n))


def test_quotient_examples():
    C6 = cayley_graph(AbelianGroup([6]), [1])
    Q, proj = quotient_graph(C6, np.arange(6))
    assert Q == C6
    Q, _ = quotient_graph(C6, np.zeros(6, int))
    assert Q.n == 1 and Q.num_edges == 0
    Q, proj = quotient_graph(C6, np.arange(6) % 3)
    assert Q.n == 3 and Q.num_edges == 3
    # projection is a homomorphism onto
    for u, v in C6.edges:
        assert proj[u] == proj[v] or Q.has_edge(proj[u], proj[v])


@pytest.mark.parametrize("mods,sub", [([6, 4], [3, 2]), ([8], [4]), ([6, 6], [2, 3]), ([10, 5], [5, 5])])
def test_quotient_of_torus_is_torus(mods, sub):
    g = AbelianGroup(mods)
    gens = [tuple(r) for r in np.eye(len(mods), dtype=int)]
    G = cayley_graph(g, gens)
    coords = g.coords(np.arange(g.order))
    label = np.ravel_multi_index(tuple((coords % np.asarray(sub)).T), sub)
    Q, _ = quotient_graph(G, label)
    gq = AbelianGroup(sub)
    direct = cayley_graph(gq, [tuple(r) for r in np.eye(len(sub), dtype=int)])
    # block label is the mixed-radix index of the residues, same as the group index
    assert Q == direct


def test_snake_paths():
    assert snake_hamiltonian(1)[:, 0].tolist() == [-1, 0, 1]
    for radii in [(1, 1), (2, 1), (1, 1, 1), (2, 0, 1)]:
        s = snake_hamiltonian(*radii)
        assert len(s) == np.prod([2 * r + 1 for r in radii])
        assert len({tuple(r) for r in s}) == len(s)
        assert (np.abs(np.diff(s, axis=0)).sum(axis=1) == 1).all()
        assert (s[(len(s) - 1) // 2] == 0).all()


@pytest.mark.parametrize("radii,k", [((1, 1), 1), ((1, 2, 1), 2), ((2, 1, 1), 1), ((1, 1, 1, 1), 2)])
def test_box_product_embedding_is_bijective_homomorphism(radii, k):
    m, n, phi = box_product_embedding(radii, k)
    assert 2 * m + 1 == np.prod([2 * r + 1 for r in radii[:k]])
    flat = phi.reshape(-1, len(radii))
    assert len({tuple(x) for x in flat}) == flat.shape[0] == np.prod([2 * r + 1 for r in radii])
    assert (np.abs(flat) <= np.asarray(radii)).all()
    assert (np.abs(np.diff(phi, axis=0)).sum(axis=2) == 1).all()
    assert (np.abs(np.diff(phi, axis=1)).sum(axis=2) == 1).all()
    assert (phi[m, n] == 0).all()


def test_central_box_embedding_abelian():
    g = AbelianGroup([4, 4])
    H = [(z, 0) for z in range(4)]
    emb = central_box_embedding(g, [(1, 0), (0, 1)], H, 1)
    sizes = emb.preimage_sizes()
    assert (sizes >= 1).all()
    assert sizes.max() <= emb.preimage_bound(2, 1) == 100
    assert sizes.max() <= 4
    assert emb.grid_edges_ok()


def test_central_box_embedding_heisenberg():
    h = HeisenbergGroup(3)
    S = h.standard_generators()
    # the centre only meets the radius-r word ball nontrivially from r = 4 on
    with pytest.raises(ValueError, match="quasiconnected"):
        central_box_embedding(h, S, h.center(), 2)
    emb = central_box_embedding(h, S, h.center(), 4)
    assert emb.grid_edges_ok()
    sizes = emb.preimage_sizes()
    assert (sizes >= 1).all() and sizes.max() <= emb.preimage_bound(2, 4)


def test_central_box_embedding_degenerate():
    g = AbelianGroup([2])
    emb = central_box_embedding(g, [1], [0, 1], 1)
    assert emb.n2 == 1 and (emb.preimage_sizes() >= 1).all()


def test_central_box_embedding_errors():
    h = HeisenbergGroup(3)
    S = h.standard_generators()
    non_central = [h.index((x, 0, 0)) for x in range(3)]
    with pytest.raises(ValueError, match="central"):
        central_box_embedding(h, S, non_central, 4)
    with pytest.raises(ValueError, match="subgroup"):
        central_box_embedding(AbelianGroup([4]), [1], [0, 1], 1)


def test_symmetrize():
    g = AbelianGroup([10])
    assert symmetrize(g, [3]).tolist() == [0, 3, 7]
