"""Immutable finite simple graphs and BFS-based metric queries."""

from __future__ import annotations

import json
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "Graph",
    "build_graph",
    "as_mask",
    "bfs_distances",
    "ball",
    "eccentricity",
    "diameter",
    "double_cover_walk",
    "edge_boundary",
    "vertex_boundary",
    "induced_subgraph",
    "connected_components",
]


class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Edges are stored once as ``(u, v)`` with ``u < v``, sorted
    lexicographically; the position of a pair in :attr:`edges` is its edge
    index. Adjacency is kept in CSR form with sorted neighbour lists.

    Use :func:`build_graph` rather than calling the constructor directly.
    """

    __slots__ = ("n", "edges", "indptr", "indices", "degree",
                 "loops_discarded", "duplicates_collapsed", "_edge_keys")

    def __init__(self, n: int, edges: np.ndarray, loops_discarded: int = 0,
                 duplicates_collapsed: int = 0):
        self.n = int(n)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        edges.setflags(write=False)
        self.edges = edges
        self.loops_discarded = loops_discarded
        self.duplicates_collapsed = duplicates_collapsed
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        self.indices = dst[order]
        self.degree = np.bincount(src, minlength=self.n).astype(np.int64)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degree, out=self.indptr[1:])
        for arr in (self.indices, self.degree, self.indptr):
            arr.setflags(write=False)
        self._edge_keys = edges[:, 0] * self.n + edges[:, 1]

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edge_index(self, u, v):
        """Edge index of ``{u, v}`` (vectorised); -1 where it is not an edge."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        key = np.minimum(u, v) * self.n + np.maximum(u, v)
        pos = np.searchsorted(self._edge_keys, key)
        pos_c = np.minimum(pos, max(len(self._edge_keys) - 1, 0))
        if len(self._edge_keys) == 0:
            return np.full(np.shape(key), -1, dtype=np.int64)[()]
        hit = (pos < len(self._edge_keys)) & (self._edge_keys[pos_c] == key)
        return np.where(hit, pos_c, -1)[()]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.edge_index(u, v) >= 0)

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": self.edges.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return build_graph(int(data["n"]), data["edges"])

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def build_graph(vertex_count: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a :class:`Graph`, discarding loops and collapsing duplicates.

    Raises ``ValueError`` if an endpoint is outside ``0..vertex_count-1``.
    """
    n = int(vertex_count)
    if n < 0:
        raise ValueError("vertex_count must be non-negative")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError("edge endpoint out of range")
    loops = arr[:, 0] == arr[:, 1]
    arr = arr[~loops]
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    keys = np.unique(lo * n + hi) if n else np.zeros(0, dtype=np.int64)
    canon = np.stack([keys // max(n, 1), keys % max(n, 1)], axis=1)
    return Graph(n, canon, loops_discarded=int(loops.sum()),
                 duplicates_collapsed=int(len(arr) - len(keys)))


def as_mask(G: Graph, A) -> np.ndarray:
    """Coerce a vertex collection (index iterable or boolean mask) to a mask."""
    if isinstance(A, np.ndarray) and A.dtype == bool:
        if A.shape != (G.n,):
            raise ValueError("mask has wrong length")
        return A
    idx = np.fromiter((int(a) for a in A), dtype=np.int64) if not isinstance(A, np.ndarray) \
        else A.astype(np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= G.n):
        raise ValueError("vertex out of range")
    mask = np.zeros(G.n, dtype=bool)
    mask[idx] = True
    return mask


def _check_vertex(G: Graph, o: int) -> int:
    o = int(o)
    if not 0 <= o < G.n:
        raise ValueError(f"vertex {o} out of range")
    return o


def bfs_distances(G: Graph, o: int) -> np.ndarray:
    """Graph distances from ``o``; unreachable vertices get -1."""
    return _kernels.bfs(G.indptr, G.indices, _check_vertex(G, o))


def ball(G: Graph, o: int, n: int) -> np.ndarray:
    """Mask of ``B(o, n)``."""
    if n < 0:
        raise ValueError("radius must be non-negative")
    d = bfs_distances(G, o)
    return (d >= 0) & (d <= n)


def eccentricity(G: Graph, o: int) -> int:
    d = bfs_distances(G, o)
    if (d < 0).any():
        raise ValueError("graph is disconnected")
    return int(d.max())


def diameter(G: Graph) -> int:
    """Exact diameter by BFS from every vertex."""
    if G.n == 0:
        raise ValueError("empty graph")
    ecc = _kernels.all_eccentricities(G.indptr, G.indices)
    if ecc[0] < 0:
        raise ValueError("graph is disconnected")
    return int(ecc.max())


def connected_components(G: Graph, open_mask: np.ndarray | None = None) -> np.ndarray:
    """Component label (smallest vertex of the component) per vertex, by BFS.

    Kept deliberately independent of the union-find path; the test-suite uses
    it as the oracle for :func:`percolab.percolation.clusters`.
    """
    if open_mask is None:
        sub = G
    else:
        sub = build_graph(G.n, G.edges[np.asarray(open_mask, dtype=bool)])
    label = np.full(G.n, -1, dtype=np.int64)
    for v in range(G.n):
        if label[v] < 0:
            d = _kernels.bfs(sub.indptr, sub.indices, v)
            label[d >= 0] = v
    return label


def double_cover_walk(G: Graph, start: int = 0) -> np.ndarray:
    """Closed walk from ``start`` crossing every edge exactly twice.

    Hierholzer's algorithm on the multigraph with every edge doubled; always
    leaves a vertex through its smallest-index unused edge copy.
    """
    start = _check_vertex(G, start)
    if G.n > 1:
        d = bfs_distances(G, start)
        if (d < 0).any():
            raise ValueError("graph is disconnected")
    # half-edge slots: each CSR entry appears twice (copy 0 and copy 1)
    eid = G.edge_index(np.repeat(np.arange(G.n), G.degree), G.indices)
    used = np.zeros((G.num_edges, 2), dtype=bool)
    ptr = G.indptr[:-1].astype(np.int64).copy() * 2
    end = G.indptr[1:] * 2
    stack = [start]
    circuit = []
    while stack:
        v = stack[-1]
        moved = False
        while ptr[v] < end[v]:
            slot = ptr[v]
            k = slot // 2
            e = eid[k]
            ptr[v] += 1
            free = np.flatnonzero(~used[e])
            if free.size:
                used[e, free[0]] = True
                stack.append(int(G.indices[k]))
                moved = True
                break
        if not moved:
            circuit.append(stack.pop())
    return np.array(circuit[::-1], dtype=np.int64)


def edge_boundary(G: Graph, A) -> tuple[int, np.ndarray]:
    """``(|∂_E A|, edge indices)`` for the edges leaving ``A``."""
    mask = as_mask(G, A)
    cross = mask[G.edges[:, 0]] != mask[G.edges[:, 1]]
    idx = np.flatnonzero(cross)
    return int(idx.size), idx


def vertex_boundary(G: Graph, A) -> np.ndarray:
    """Mask of the external vertex boundary: vertices outside A adjacent to A."""
    mask = as_mask(G, A)
    out = np.zeros(G.n, dtype=bool)
    u, v = G.edges[:, 0], G.edges[:, 1]
    out[v[mask[u] & ~mask[v]]] = True
    out[u[mask[v] & ~mask[u]]] = True
    return out


def induced_subgraph(G: Graph, A) -> tuple[Graph, np.ndarray]:
    """Subgraph induced by ``A``; returns it with the old vertex ids in order."""
    mask = as_mask(G, A)
    old = np.flatnonzero(mask)
    new = np.full(G.n, -1, dtype=np.int64)
    new[old] = np.arange(old.size)
    keep = mask[G.edges[:, 0]] & mask[G.edges[:, 1]]
    return build_graph(old.size, new[G.edges[keep]]), old
