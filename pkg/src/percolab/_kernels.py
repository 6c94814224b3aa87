"""Compiled inner loops: BFS, union-find clustering and Newman-Ziff sweeps.

Everything here works on flat int64 arrays (CSR adjacency, edge endpoint
arrays) so the callers in :mod:`percolab.graph` and
:mod:`percolab.percolation` stay in plain numpy.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def bfs(indptr, indices, source):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = du
                queue[tail] = w
                tail += 1
    return dist


@njit(cache=True)
def bfs_parents(indptr, indices, source):
    """BFS distances plus the parent of each vertex in the BFS tree.

    Neighbours are scanned in CSR order (sorted), so the tree is the
    smallest-index-first one.
    """
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                parent[w] = u
                queue[tail] = w
                tail += 1
    return dist, parent


@njit(cache=True)
def all_eccentricities(indptr, indices):
    """Eccentricity of every vertex; -1 if the graph is disconnected."""
    n = indptr.shape[0] - 1
    ecc = np.zeros(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue[tail] = w
                    tail += 1
        if tail < n:
            return np.full(n, -1, dtype=np.int64)
        ecc[s] = dist[queue[tail - 1]]
    return ecc


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    # path compression
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def union_find(n, eu, ev, open_mask):
    """Union by rank with path compression over the open edges.

    Returns (parent, rank, size) where after the final compression pass
    ``parent[v]`` is the root of v and ``size[r]`` is the cluster size for
    roots r (zero elsewhere).
    """
    parent = np.arange(n, dtype=np.int64)
    rank = np.zeros(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    for e in range(eu.shape[0]):
        if not open_mask[e]:
            continue
        a = _find(parent, eu[e])
        b = _find(parent, ev[e])
        if a == b:
            continue
        if rank[a] < rank[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        size[b] = 0
        if rank[a] == rank[b]:
            rank[a] += 1
    for v in range(n):
        _find(parent, v)
    return parent, rank, size


@njit(cache=True)
def giant_thresholds(n, eu, ev, uniforms, target):
    """Newman-Ziff sweep for each row of ``uniforms``.

    Edge e is open at level p iff ``uniforms[t, e] < p``.  Adding edges in
    increasing order of their uniform, the returned value for trial t is the
    uniform at which the largest cluster first reaches ``target`` vertices
    (0.0 if target <= 1, and 2.0 if it never does).
    """
    trials = uniforms.shape[0]
    out = np.empty(trials, dtype=np.float64)
    parent = np.empty(n, dtype=np.int64)
    size = np.empty(n, dtype=np.int64)
    for t in range(trials):
        if target <= 1:
            out[t] = 0.0
            continue
        for v in range(n):
            parent[v] = v
            size[v] = 1
        order = np.argsort(uniforms[t])
        out[t] = 2.0
        for idx in range(order.shape[0]):
            e = order[idx]
            a = _find(parent, eu[e])
            b = _find(parent, ev[e])
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            if size[a] >= target:
                out[t] = uniforms[t, e]
                break
    return out


@njit(cache=True)
def escape_walks(indptr, indices, start, label, walks, seed):
    """Run ``walks`` simple random walks from ``start``; each stops on its
    first return to a vertex with label 1 or first visit to label 2.

    Returns how many stopped on label 2. Uses numba's own Mersenne Twister,
    seeded here, so the count is reproducible for a given seed.
    """
    np.random.seed(seed)
    hits = 0
    for _ in range(walks):
        v = start
        while True:
            deg = indptr[v + 1] - indptr[v]
            v = indices[indptr[v] + np.random.randint(0, deg)]
            if label[v] == 2:
                hits += 1
                break
            if label[v] == 1:
                break
    return hits


@njit(cache=True)
def _popcount(x):
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    return (x * 0x0101010101010101) >> 56


@njit(cache=True)
def _mask_connected(mask, nbr):
    low = mask & (-mask)
    reach = low
    while True:
        grow = reach
        rest = reach
        while rest:
            b = rest & (-rest)
            v = 0
            while (b >> v) != 1:
                v += 1
            grow |= nbr[v]
            rest ^= b
        grow &= mask
        if grow == reach:
            return reach == mask
        reach = grow


@njit(cache=True)
def subset_min_boundary(n, nbr, degree, connected_only):
    """Exact ``min |∂_E A|`` over ``|A| = s`` for ``s = 0..n//2``, walking
    all subsets in Gray-code order with an O(1) boundary update per step.

    Returns ``(best, witness_bitmask)``; the first minimiser met is kept.
    """
    half = n // 2
    best = np.full(half + 1, np.iinfo(np.int64).max, dtype=np.int64)
    wit = np.zeros(half + 1, dtype=np.int64)
    best[0] = 0
    S = np.int64(0)
    b = 0
    size = 0
    total = np.int64(1) << n
    for i in range(1, total):
        v = 0
        while ((i >> v) & 1) == 0:
            v += 1
        bit = np.int64(1) << v
        if S & bit:
            S ^= bit
            k = _popcount(nbr[v] & S)
            b -= degree[v] - 2 * k
            size -= 1
        else:
            k = _popcount(nbr[v] & S)
            b += degree[v] - 2 * k
            S |= bit
            size += 1
        if size <= half and b < best[size]:
            if connected_only and not _mask_connected(S, nbr):
                continue
            best[size] = b
            wit[size] = S
    return best, wit


@njit(cache=True)
def anneal_iso(indptr, indices, degree, allowed, init, iters, t0, t1, expo, seed):
    """Simulated annealing over subsets of ``allowed`` minimising
    ``|∂_E A| / min(|A|, n-|A|)^expo`` by single-vertex flips."""
    np.random.seed(seed)
    n = degree.shape[0]
    inset = init.copy()
    k = np.zeros(n, dtype=np.int64)
    b = 0
    size = 0
    for v in range(n):
        if inset[v]:
            size += 1
            for j in range(indptr[v], indptr[v + 1]):
                k[indices[j]] += 1
    for v in range(n):
        if inset[v]:
            b += degree[v] - k[v]
    cand = np.flatnonzero(allowed)
    m = cand.shape[0]
    best_mask = inset.copy()
    inf = 1e300

    def score(bb, ss):
        lo = min(ss, n - ss)
        if lo <= 0:
            return inf
        return bb / lo ** expo

    cur = score(b, size)
    best = cur
    if m == 0:
        return best_mask, best
    for it in range(iters):
        t = t0 * (t1 / t0) ** (it / max(iters - 1, 1))
        v = cand[np.random.randint(0, m)]
        if inset[v]:
            nb = b - (degree[v] - 2 * k[v])
            ns = size - 1
        else:
            nb = b + degree[v] - 2 * k[v]
            ns = size + 1
        new = score(nb, ns)
        if new <= cur or np.random.random() < np.exp(-(new - cur) / t):
            delta = -1 if inset[v] else 1
            inset[v] = not inset[v]
            for j in range(indptr[v], indptr[v + 1]):
                k[indices[j]] += delta
            b = nb
            size = ns
            cur = new
            if cur < best - 1e-12:
                best = cur
                best_mask[:] = inset
    return best_mask, best
