"""Explicit couplings between percolation configurations.

Each coupling returns both configurations built from one source of
randomness, together with enough structure to check its cluster-containment
property sample by sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import Graph, as_mask, bfs_distances
from .groups import quotient_graph
from .percolation import (McEstimate, PercSample, clusters, edge_uniforms, sample_config,
                          _check_p)

__all__ = [
    "union_coupling",
    "QuotientCoupling",
    "quotient_coupling",
    "geodesic_edge_sets",
    "RoughCoupling",
    "rough_embedding_coupling",
    "GhostField",
    "ghost_field",
    "ghost_connect",
    "ghost_tail_check",
    "GHOST_CHERNOFF_A",
    "blocked_cycle_count",
    "blocked_cycle_expected",
    "dominance_check",
]

STREAM_SECOND = 1
STREAM_GHOST = 2
STREAM_ETA = 3

# one may take a = (e-2)^2 / (8 (e-1)^2) in the ghost-field lower tail bound
GHOST_CHERNOFF_A = (math.e - 2) ** 2 / (8 * (math.e - 1) ** 2)


def union_coupling(G: Graph, p1: float, p2: float, seed: int, trial: int = 0
                   ) -> tuple[PercSample, PercSample]:
    """``(ω1, ω1 ∪ ω2)`` with independent ``ω1 ~ p1`` and ``ω2 ~ p2``.

    The union is Bernoulli with retention ``1-(1-p1)(1-p2)`` and always
    contains ``ω1``.
    """
    _check_p(p1), _check_p(p2)
    w1 = sample_config(G, p1, seed, trial)
    w2 = sample_config(G, p2, seed, trial, stream=STREAM_SECOND)
    p_union = 1 - (1 - p1) * (1 - p2)
    return w1, PercSample(w1.open_edges | w2.open_edges, p_union, seed, trial)


@dataclass
class QuotientCoupling:
    graph: Graph
    omega: PercSample
    eta: np.ndarray
    quotient: Graph
    projection: np.ndarray
    edge_map: np.ndarray          # G-edge -> quotient edge, -1 for edges inside a block
    preimage_sizes: np.ndarray    # per quotient edge

    def containment_ok(self) -> bool:
        """``π(K_v(ω)) ⊆ K_{π(v)}(η)`` for every vertex v."""
        fg = clusters(self.graph, self.omega)
        fq = clusters(self.quotient, self.eta)
        proj = self.projection
        return bool(np.all(fq.parent[proj] == fq.parent[proj[fg.parent]]))

    def eta_open_probability(self, p: float) -> np.ndarray:
        """Exact open probability of each quotient edge, ``1-(1-p)^{|π⁻¹(ē)|}``."""
        return 1 - (1 - p) ** self.preimage_sizes


def quotient_coupling(G: Graph, orbit_map, p: float, seed: int, trial: int = 0
                      ) -> QuotientCoupling:
    """Project ``ω`` on G to ``η`` on G/H: ``η(ē) = 1`` iff a preimage edge is open."""
    Q, proj = quotient_graph(G, orbit_map)
    omega = sample_config(G, p, seed, trial)
    a, b = proj[G.edges[:, 0]], proj[G.edges[:, 1]]
    cross = a != b
    edge_map = np.full(G.num_edges, -1, dtype=np.int64)
    edge_map[cross] = Q.edge_index(a[cross], b[cross])
    pre = np.bincount(edge_map[cross], minlength=Q.num_edges)
    opened = np.bincount(edge_map[cross & omega.open_edges], minlength=Q.num_edges)
    return QuotientCoupling(G, omega, opened > 0, Q, proj, edge_map, pre)


def geodesic_edge_sets(G1: Graph, G2: Graph, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each edge ``{x, y}`` of G1, the G2-edges of one shortest path
    from ``φ(x)`` to ``φ(y)`` (BFS tree from ``φ(x)``, smallest-index parents).

    Returned as parallel arrays ``(e1, e2)`` listing every pair with
    ``e2 ∈ Φ(e1)``.
    """
    phi = np.asarray(phi, dtype=np.int64)
    if phi.shape != (G1.n,):
        raise ValueError("phi must be defined on every vertex of G1")
    if phi.size and (phi.min() < 0 or phi.max() >= G2.n):
        raise ValueError("phi maps outside G2")
    cache: dict[int, np.ndarray] = {}
    e1s, e2s = [], []
    for e1, (x, y) in enumerate(G1.edges):
        s, t = int(phi[x]), int(phi[y])
        if s == t:
            continue
        if s not in cache:
            cache[s] = _kernels.bfs_parents(G2.indptr, G2.indices, s)[1]
        parent = cache[s]
        path = [t]
        while path[-1] != s:
            nxt = int(parent[path[-1]])
            if nxt < 0:
                raise ValueError("G2 is disconnected")
            path.append(nxt)
        path = np.asarray(path)
        e2 = G2.edge_index(path[:-1], path[1:])
        e1s.append(np.full(e2.size, e1))
        e2s.append(np.atleast_1d(e2))
    if not e1s:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(e1s), np.concatenate(e2s)


@dataclass
class RoughCoupling:
    omega1: np.ndarray
    omega2: np.ndarray
    pair_e1: np.ndarray
    pair_e2: np.ndarray
    overlap: int
    G1: Graph
    G2: Graph
    phi: np.ndarray

    def containment_ok(self) -> bool:
        """``φ(K_v(ω1)) ⊆ K_{φ(v)}(ω2)`` for every vertex v of G1."""
        f1 = clusters(self.G1, self.omega1)
        f2 = clusters(self.G2, self.omega2)
        return bool(np.all(f2.parent[self.phi] == f2.parent[self.phi[f1.parent]]))


def rough_embedding_coupling(G1: Graph, G2: Graph, phi, q: float, seed: int, trial: int = 0,
                             pairs: tuple[np.ndarray, np.ndarray] | None = None) -> RoughCoupling:
    """Couple percolation on G1 and G2 through independent ``η(e1, e2) ~ q``.

    ``ω1(e1) = 1`` iff every ``η(e1, ·)`` on ``Φ(e1)`` is 1 (vacuously so when
    φ collapses e1); ``ω2(e2) = 1`` iff some ``η(·, e2)`` is 1. ``overlap`` is
    the constant C bounding both ``|Φ(e1)|`` and the backward multiplicity.
    """
    _check_p(q)
    phi = np.asarray(phi, dtype=np.int64)
    e1, e2 = pairs if pairs is not None else geodesic_edge_sets(G1, G2, phi)
    eta = edge_uniforms(e1.size, seed, trial, stream=STREAM_ETA) < q
    closed_count = np.bincount(e1[~eta], minlength=G1.num_edges)
    omega1 = closed_count == 0
    omega2 = np.bincount(e2[eta], minlength=G2.num_edges) > 0
    fwd = np.bincount(e1, minlength=G1.num_edges)
    bwd = np.bincount(e2, minlength=G2.num_edges)
    overlap = int(max(fwd.max(initial=0), bwd.max(initial=0)))
    return RoughCoupling(omega1, omega2, e1, e2, overlap, G1, G2, phi)


@dataclass(frozen=True)
class GhostField:
    members: np.ndarray
    h: float
    seed: int
    trial: int = 0


def ghost_field(G: Graph, h: float, seed: int, trial: int = 0) -> GhostField:
    """Each vertex joins independently with probability ``1 - e^{-h}``."""
    if h < 0:
        raise ValueError("h must be non-negative")
    u = edge_uniforms(G.n, seed, trial, stream=STREAM_GHOST)
    return GhostField(u < -math.expm1(-h), h, seed, trial)


def ghost_connect(G: Graph, p: float, h: float, A, trials: int, seed: int) -> dict:
    """Estimate ``P_{p,h}(A ↔ 𝒢)`` two ways.

    ``direct`` samples the ghost field; ``conditional`` averages
    ``1 - exp(-h|K_A|)`` over percolation samples only. Both estimate the
    same probability.
    """
    mask = as_mask(G, A)
    hits = 0
    cond = np.empty(trials)
    for t in range(trials):
        f = clusters(G, sample_config(G, p, seed, t))
        roots = np.unique(f.parent[mask])
        in_ka = np.isin(f.parent, roots)
        g = ghost_field(G, h, seed, t)
        hits += bool((in_ka & g.members).any())
        cond[t] = -math.expm1(-h * int(in_ka.sum()))
    direct = McEstimate.from_counts(hits, trials, seed)
    cse = float(cond.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return {"direct": direct, "conditional": float(cond.mean()), "conditional_stderr": cse}


def ghost_tail_check(n: int, h: float, trials: int, seed: int) -> dict:
    """Empirical ``P(|𝒢| ≤ h n / 2)`` against ``exp(-a h n)``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, STREAM_GHOST])))
    sizes = rng.binomial(n, -math.expm1(-h), size=trials)
    freq = float((sizes <= h * n / 2).mean())
    bound = math.exp(-GHOST_CHERNOFF_A * h * n)
    se = math.sqrt(max(freq * (1 - freq), 1.0 / trials) / trials)
    return {"frequency": freq, "bound": bound, "stderr": se,
            "pass": bool(freq <= bound + 3 * se)}


def blocked_cycle_count(G: Graph, n: int, m: int, open_edges: np.ndarray) -> int:
    """Number of even columns ``x`` of the torus ``Z_n x Z_m`` whose cycle
    ``{x} x Z_m`` has every incident edge closed.

    Vertex ``(x, y)`` has index ``x*m + y``. Only ``x = 0, 2, ..., 2(⌊n/2⌋-1)``
    are used so the incident edge sets are disjoint.
    """
    xs = 2 * np.arange(n // 2)
    y = np.arange(m)
    X, Y = np.meshgrid(xs, y, indexing="ij")
    v = X * m + Y
    right = ((X + 1) % n) * m + Y
    left = ((X - 1) % n) * m + Y
    up = X * m + (Y + 1) % m
    closed = ~open_edges
    blocked = np.ones(len(xs), dtype=bool)
    for w in (right, left, up):
        e = G.edge_index(v, w)
        valid = e >= 0
        blocked &= np.all(~valid | closed[np.where(valid, e, 0)], axis=1)
    return int(blocked.sum())


def blocked_cycle_expected(n: int, m: int, p: float) -> float:
    """Mean of :func:`blocked_cycle_count`: ``⌊n/2⌋ (1-p)^{e(m)}`` where
    ``e(m)`` counts the distinct edges touching a cycle.

    ``e(m) = 3m`` for ``m ≥ 3``; for m = 2 the two vertical steps are the
    same edge and for m = 1 there is none, giving 5 and 2. Needs n ≥ 3.
    """
    if n < 3 or m < 1:
        raise ValueError("need n >= 3 and m >= 1")
    vertical = m if m >= 3 else m - 1
    return (n // 2) * (1 - p) ** (2 * m + vertical)


def dominance_check(sample_a: np.ndarray, sample_b: np.ndarray, z: float = 3.0) -> dict:
    """One-sided check that ``a`` stochastically dominates ``b``.

    Compares empirical survival functions on the pooled support; passes if
    nowhere does ``P(b ≥ t)`` exceed ``P(a ≥ t)`` by more than z standard
    errors.
    """
    a = np.asarray(sample_a)
    b = np.asarray(sample_b)
    ts = np.unique(np.concatenate([a, b]))
    sa = (a[None, :] >= ts[:, None]).mean(axis=1)
    sb = (b[None, :] >= ts[:, None]).mean(axis=1)
    se = np.sqrt(sa * (1 - sa) / a.size + sb * (1 - sb) / b.size + 1e-300)
    worst = float(np.max((sb - sa) / np.maximum(se, 1.0 / max(a.size, b.size))))
    return {"worst_z": worst, "pass": bool(worst <= z)}
