"""Volume growth, isoperimetric profiles and covering constructions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import Graph, as_mask, bfs_distances, edge_boundary, vertex_boundary

__all__ = [
    "GrowthProfile",
    "IsoWitness",
    "IsoProfile",
    "growth_profile",
    "scale_detect",
    "csc_bound",
    "exhaustive_iso_profile",
    "local_search_iso",
    "iso_ratio",
    "check_sparse_boundary",
    "net_cover",
    "disjoint_balls_on_geodesic",
    "linear_rel_growth_check",
    "ball_sizes",
]


@dataclass(frozen=True)
class GrowthProfile:
    origin: int
    sizes: np.ndarray   # sizes[n] = |B(o, n)| for n = 0..diam

    @property
    def radius(self) -> int:
        return int(self.sizes.size - 1)


def growth_profile(G: Graph, o: int) -> GrowthProfile:
    """``|B(o, n)|`` for ``n = 0..ecc(o)`` from a single BFS."""
    d = bfs_distances(G, o)
    if (d < 0).any():
        raise ValueError("graph is disconnected")
    sizes = np.cumsum(np.bincount(d))
    sizes.setflags(write=False)
    return GrowthProfile(int(o), sizes)


def scale_detect(profile: GrowthProfile, d: float, c: float) -> int:
    """Largest ``n`` in ``1..radius`` with ``|B(o,n)| ≥ c n^d``; 0 if none."""
    if d < 1 or c <= 0:
        raise ValueError("need d >= 1 and c > 0")
    n = np.arange(1, profile.sizes.size)
    ok = profile.sizes[1:] >= c * n.astype(float) ** d
    return int(n[ok].max()) if ok.any() else 0


def csc_bound(profile: GrowthProfile, d: float, n: int, setsize: int, c: float = 1.0) -> float:
    """``c * min(1, |B(o,n)|^{1/d} / n) * setsize^{(d-1)/d}``.

    ``c`` is only a display normalisation; the true constant is not explicit.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 1 <= n <= profile.radius:
        raise ValueError("n must lie in 1..diam")
    vol = float(profile.sizes[n])
    if not 0 <= setsize <= vol / 2:
        raise ValueError("setsize must lie in 0..|B(o,n)|/2")
    return c * min(1.0, vol ** (1.0 / d) / n) * setsize ** ((d - 1.0) / d)


def iso_ratio(boundary: int, size: int, n: int, d: float) -> float:
    lo = min(size, n - size)
    if lo <= 0:
        return math.inf
    return boundary / lo ** ((d - 1.0) / d)


@dataclass(frozen=True)
class IsoWitness:
    members: np.ndarray   # mask
    boundary: int
    ratio: float
    d: float

    @property
    def size(self) -> int:
        return int(self.members.sum())


@dataclass(frozen=True)
class IsoProfile:
    """Exact ``min |∂_E A|`` over ``|A| = s``, ``s = 0..|V|//2``."""

    min_boundary: np.ndarray
    witnesses: list
    connected_only: bool

    def best(self, d: float) -> IsoWitness:
        """Minimiser of ``|∂_E A| / min(|A|, |V∖A|)^{(d-1)/d}``."""
        n = self.witnesses[0].size
        best = None
        for s in range(1, self.min_boundary.size):
            if self.min_boundary[s] == np.iinfo(np.int64).max:
                continue
            r = iso_ratio(int(self.min_boundary[s]), s, n, d)
            if best is None or r < best.ratio - 1e-12:
                best = IsoWitness(self.witnesses[s], int(self.min_boundary[s]), r, d)
        if best is None:
            raise ValueError("graph has fewer than two vertices")
        return best


def exhaustive_iso_profile(G: Graph, limit: int = 20, connected_only: bool = False) -> IsoProfile:
    """Enumerate every subset (or every connected subset) of V.

    The full enumeration is exact; ``connected_only`` only looks at
    connected sets and so gives an upper bound.
    """
    if G.n > limit:
        raise ValueError(f"|V| = {G.n} exceeds the enumeration limit {limit}")
    if G.n > 62:
        raise ValueError("bitmask enumeration supports at most 62 vertices")
    nbr = np.zeros(max(G.n, 1), dtype=np.int64)
    for u, v in G.edges:
        nbr[u] |= np.int64(1) << np.int64(v)
        nbr[v] |= np.int64(1) << np.int64(u)
    best, wit = _kernels.subset_min_boundary(G.n, nbr, G.degree, connected_only)
    masks = [((int(w) >> np.arange(G.n)) & 1).astype(bool) for w in wit]
    return IsoProfile(best, masks, connected_only)


def _greedy_starts(G: Graph, allowed: np.ndarray, rng: np.random.Generator, d: float,
                   max_starts: int = 64) -> list[np.ndarray]:
    """Grow sets from single vertices, always adding the vertex that adds
    the least boundary; return the best prefix of each growth."""
    n = G.n
    cand = np.flatnonzero(allowed)
    if cand.size > max_starts:
        cand = rng.choice(cand, max_starts, replace=False)
    out = []
    for v0 in cand:
        inset = np.zeros(n, dtype=bool)
        k = np.zeros(n, dtype=np.int64)
        b = 0
        best_r, best_m = math.inf, None
        v = int(v0)
        for size in range(1, n // 2 + 1):
            b += int(G.degree[v] - 2 * k[v])
            inset[v] = True
            k[G.neighbors(v)] += 1
            r = iso_ratio(b, size, n, d)
            if r < best_r:
                best_r, best_m = r, inset.copy()
            gain = np.where(allowed & ~inset, G.degree - 2 * k, np.iinfo(np.int64).max)
            if gain.min() == np.iinfo(np.int64).max:
                break
            ties = np.flatnonzero(gain == gain.min())
            v = int(rng.choice(ties))
        if best_m is not None:
            out.append(best_m)
    return out


def local_search_iso(G: Graph, d: float, ball_constraint=None, seed: int = 0,
                     iters: int = 20000, restarts: int = 4) -> IsoWitness:
    """Heuristic minimiser of ``|∂_E A| / min(|A|, |V∖A|)^{(d-1)/d}``.

    ``ball_constraint`` restricts A to a vertex set: a mask, an index list,
    or a pair ``(o, radius)`` meaning ``B(o, radius)``. Greedy growth from
    many seeds is followed by simulated annealing; the result is an upper
    bound on the true minimum.
    """
    if ball_constraint is None:
        allowed = np.ones(G.n, dtype=bool)
    elif isinstance(ball_constraint, tuple) and len(ball_constraint) == 2:
        o, rad = ball_constraint
        dist = bfs_distances(G, int(o))
        allowed = (dist >= 0) & (dist <= int(rad))
    else:
        allowed = as_mask(G, ball_constraint)
    if G.n < 2 or not allowed.any():
        raise ValueError("need at least two vertices and a nonempty allowed region")
    rng = np.random.default_rng(seed)
    expo = (d - 1.0) / d
    starts = _greedy_starts(G, allowed, rng, d)
    scored = sorted(starts, key=lambda m: iso_ratio(edge_boundary(G, m)[0], int(m.sum()), G.n, d))
    best_mask = scored[0] if scored else allowed & (np.arange(G.n) == np.flatnonzero(allowed)[0])
    best = iso_ratio(edge_boundary(G, best_mask)[0], int(best_mask.sum()), G.n, d)
    inits = scored[:restarts]
    while len(inits) < restarts + 1:
        m = np.zeros(G.n, dtype=bool)
        m[rng.choice(np.flatnonzero(allowed))] = True
        inits.append(m)
    scale = max(float(G.degree.max()), 1.0)
    for init in inits:
        s = int(rng.integers(2**31))
        mask, r = _kernels.anneal_iso(G.indptr, G.indices, G.degree, allowed, init,
                                      iters, 0.5 * scale, 1e-3 * scale, expo, s)
        if r < best - 1e-12:
            best, best_mask = r, mask
    bd = edge_boundary(G, best_mask)[0]
    return IsoWitness(best_mask, bd, iso_ratio(bd, int(best_mask.sum()), G.n, d), d)


def ball_sizes(G: Graph, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean matrix ``M[x, v] = (d(x, v) ≤ r)`` and the ball sizes."""
    M = np.empty((G.n, G.n), dtype=bool)
    for x in range(G.n):
        dist = bfs_distances(G, x)
        M[x] = (dist >= 0) & (dist <= r)
    return M, M.sum(axis=1)


def check_sparse_boundary(G: Graph, A, r: int, rho: float, balls=None) -> dict:
    """Both sides of the locally-sparse boundary bound.

    Hypothesis: ``|A ∩ B(x,r)| ≤ ρ|B(x,r)|`` for every x (exact scan).
    Conclusion: ``|∂_E A| ≥ |∂_V^+ A| ≥ (1-ρ)|A| / (6r)``. The conclusion is
    only claimed for vertex-transitive G; ``conclusion_ok`` is reported
    regardless.
    """
    if r < 1 or not 0 < rho < 1:
        raise ValueError("need r >= 1 and 0 < rho < 1")
    mask = as_mask(G, A)
    M, vol = balls if balls is not None else ball_sizes(G, r)
    dens = M.astype(np.int64) @ mask.astype(np.int64)
    bad = np.flatnonzero(dens > rho * vol + 1e-12)
    vb = int(vertex_boundary(G, mask).sum())
    eb = edge_boundary(G, mask)[0]
    bound = (1 - rho) * int(mask.sum()) / (6 * r)
    return {
        "vertex_boundary": vb,
        "edge_boundary": eb,
        "bound": bound,
        "hypothesis_ok": bool(bad.size == 0),
        "witness": int(bad[0]) if bad.size else None,
        "conclusion_ok": bool(eb >= vb >= bound - 1e-12),
    }


def net_cover(G: Graph, A, m: int) -> tuple[np.ndarray, bool]:
    """Greedy maximal ``X ⊆ A`` with the balls ``B(x, m)`` pairwise disjoint.

    Returns X (in index order) and whether ``A ⊆ ∪ B(x, 2m)`` was verified.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    mask = as_mask(G, A)
    near = np.full(G.n, np.iinfo(np.int64).max)   # distance to the chosen X
    X = []
    for a in np.flatnonzero(mask):
        if near[a] > 2 * m:
            X.append(int(a))
            dist = bfs_distances(G, int(a))
            near = np.where(dist >= 0, np.minimum(near, dist), near)
    X = np.asarray(X, dtype=np.int64)
    covered = bool(np.all(near[mask] <= 2 * m))
    return X, covered


def disjoint_balls_on_geodesic(G: Graph, v: int, n: int, m: int) -> list[tuple[int, int]]:
    """Disjoint balls ``B(x, m)`` inside ``B(v, n)`` centred on a geodesic.

    Walks a shortest path ``x_0 = v, ..., x_k`` with ``k = ⌈n/2⌉`` (BFS tree
    to the farthest vertex, smallest index on ties) and takes the centres
    ``x_{(2m+1)i}`` for ``0 ≤ i ≤ (k-m)/(2m+1)``. Disjointness and
    containment are checked exactly; returns ``[(centre, m), ...]``.
    """
    if m < 0 or 2 * m > n:
        raise ValueError("need 0 <= m <= n/2")
    dist, parent = _kernels.bfs_parents(G.indptr, G.indices, int(v))
    if (dist < 0).any():
        raise ValueError("graph is disconnected")
    k = -(-n // 2)
    if 2 * int(dist.max()) < n:
        raise ValueError("diameter is smaller than n")
    far = int(np.flatnonzero(dist == dist.max())[0])
    path = [far]
    while path[-1] != v:
        path.append(int(parent[path[-1]]))
    path = path[::-1][:k + 1]
    centres = [path[(2 * m + 1) * i] for i in range((k - m) // (2 * m + 1) + 1)]
    seen = np.zeros(G.n, dtype=bool)
    inner = (bfs_distances(G, v) <= n)
    for x in centres:
        dx = bfs_distances(G, x)
        b = (dx >= 0) & (dx <= m)
        if (b & seen).any() or (b & ~inner).any():
            raise AssertionError("constructed balls are not disjoint inside B(v, n)")
        seen |= b
    return [(int(x), int(m)) for x in centres]


def linear_rel_growth_check(G: Graph, v: int = 0) -> dict:
    """Check ``|B(v,m2)| / |B(v,m1)| ≥ max(1, (m2-2m1)/(4m1+2)) ≥ m2/(8m1)``
    for all ``1 ≤ m1 ≤ m2 ≤ diam`` (G assumed transitive, so ecc = diam)."""
    prof = growth_profile(G, v).sizes.astype(float)
    D = prof.size - 1
    violations = []
    for m1 in range(1, D + 1):
        for m2 in range(m1, D + 1):
            ratio = prof[m2] / prof[m1]
            mid = max(1.0, (m2 - 2 * m1) / (4 * m1 + 2))
            if ratio < mid - 1e-12 or mid < m2 / (8 * m1) - 1e-12:
                violations.append((m1, m2))
    return {"pairs": D * (D + 1) // 2, "violations": violations, "pass": not violations}
