"""Concrete finite groups, Cayley graphs and the box / torus families.

Group elements are integers ``0..order-1`` with the identity at 0.  For an
:class:`AbelianGroup` the integer is the mixed-radix index of the coordinate
vector; for a :class:`HeisenbergGroup` mod n it is ``x*n*n + y*n + z``.
All group operations are vectorised over numpy integer arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, build_graph, double_cover_walk, bfs_distances

__all__ = [
    "FiniteGroup",
    "AbelianGroup",
    "HeisenbergGroup",
    "symmetrize",
    "generated_subgroup",
    "generates",
    "word_ball",
    "cayley_graph",
    "grid_graph",
    "box_graph",
    "elongated_torus",
    "heisenberg_cayley",
    "quotient_graph",
    "snake_hamiltonian",
    "box_product_embedding",
    "GridEmbedding",
    "central_box_embedding",
]


class FiniteGroup:
    """Minimal interface: ``order``, ``mul``, ``inv`` on element indices."""

    order: int

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def elements(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    def element(self, idx: int) -> tuple:
        raise NotImplementedError

    def index(self, coords) -> int:
        raise NotImplementedError

    def commutator(self, a, b):
        return self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))

    def as_indices(self, elements) -> np.ndarray:
        """Accept element indices or coordinate tuples and return indices."""
        out = []
        for e in elements:
            if isinstance(e, (tuple, list, np.ndarray)) and np.ndim(e) == 1:
                out.append(self.index(e))
            else:
                out.append(int(e))
        return np.asarray(out, dtype=np.int64)


class AbelianGroup(FiniteGroup):
    """``Z_{n1} x ... x Z_{nd}`` in additive notation."""

    def __init__(self, moduli: Sequence[int]):
        moduli = tuple(int(m) for m in moduli)
        if not moduli or any(m < 1 for m in moduli):
            raise ValueError("moduli must be a non-empty list of integers >= 1")
        self.moduli = moduli
        self.order = int(np.prod(moduli))
        self._mod = np.asarray(moduli, dtype=np.int64)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    def coords(self, idx) -> np.ndarray:
        """Coordinate vectors, shape ``idx.shape + (d,)``."""
        return np.stack(np.unravel_index(np.asarray(idx, dtype=np.int64), self.moduli), axis=-1)

    def index(self, coords) -> int | np.ndarray:
        c = np.mod(np.asarray(coords, dtype=np.int64), self._mod)
        return np.ravel_multi_index(tuple(np.moveaxis(c, -1, 0)), self.moduli)[()]

    def element(self, idx: int) -> tuple:
        return tuple(int(c) for c in self.coords(idx))

    def mul(self, a, b):
        return self.index(self.coords(a) + self.coords(b))

    add = mul

    def inv(self, a):
        return self.index(-self.coords(a))

    neg = inv

    def scale(self, k, a):
        """``k * a`` for integer ``k`` (vectorised over both)."""
        k = np.asarray(k, dtype=np.int64)
        return self.index(k[..., None] * self.coords(a))

    def __repr__(self) -> str:
        return "AbelianGroup(" + "x".join(f"Z{m}" for m in self.moduli) + ")"

    def __eq__(self, other):
        return isinstance(other, AbelianGroup) and self.moduli == other.moduli

    def __hash__(self):
        return hash(self.moduli)


class HeisenbergGroup(FiniteGroup):
    """Upper unitriangular 3x3 matrices mod n as triples ``(x, y, z)``.

    ``(x,y,z)(x',y',z') = (x+x', y+y', z+z'+x*y')``.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("modulus must be >= 1")
        self.n = int(n)
        self.order = self.n ** 3

    def _split(self, a):
        a = np.asarray(a, dtype=np.int64)
        n = self.n
        return a // (n * n), (a // n) % n, a % n

    def index(self, coords) -> int | np.ndarray:
        c = np.mod(np.asarray(coords, dtype=np.int64), self.n)
        return (c[..., 0] * self.n * self.n + c[..., 1] * self.n + c[..., 2])[()]

    def element(self, idx: int) -> tuple:
        return tuple(int(c) for c in self._split(idx))

    def mul(self, a, b):
        x, y, z = self._split(a)
        x2, y2, z2 = self._split(b)
        n = self.n
        return (((x + x2) % n) * n * n + ((y + y2) % n) * n + (z + z2 + x * y2) % n)[()]

    def inv(self, a):
        x, y, z = self._split(a)
        n = self.n
        return (((-x) % n) * n * n + ((-y) % n) * n + (x * y - z) % n)[()]

    def center(self) -> np.ndarray:
        return np.asarray([self.index((0, 0, z)) for z in range(self.n)], dtype=np.int64)

    def standard_generators(self) -> np.ndarray:
        return np.asarray([self.index((1, 0, 0)), self.index((0, 1, 0))], dtype=np.int64)

    def __repr__(self) -> str:
        return f"HeisenbergGroup(n={self.n})"


def symmetrize(group: FiniteGroup, S) -> np.ndarray:
    """Sorted indices of ``Ŝ = S ∪ {id} ∪ S⁻¹``."""
    s = group.as_indices(S)
    return np.unique(np.concatenate([[0], s, np.atleast_1d(group.inv(s))]).astype(np.int64))


def generated_subgroup(group: FiniteGroup, S) -> np.ndarray:
    """Mask of ``<S>`` computed by closure under right multiplication."""
    gens = symmetrize(group, S)
    seen = np.zeros(group.order, dtype=bool)
    seen[0] = True
    frontier = np.array([0], dtype=np.int64)
    while frontier.size:
        nxt = np.unique(np.atleast_1d(group.mul(frontier[:, None], gens[None, :])).ravel())
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return seen


def generates(group: FiniteGroup, S) -> bool:
    return bool(generated_subgroup(group, S).all())


def word_ball(group: FiniteGroup, S, r: int) -> np.ndarray:
    """Mask of ``Ŝ^r`` (elements of word length at most r)."""
    gens = symmetrize(group, S)
    seen = np.zeros(group.order, dtype=bool)
    seen[0] = True
    frontier = np.array([0], dtype=np.int64)
    for _ in range(r):
        if not frontier.size:
            break
        nxt = np.unique(np.atleast_1d(group.mul(frontier[:, None], gens[None, :])).ravel())
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return seen


def cayley_graph(group: FiniteGroup, S, require_generating: bool = True) -> Graph:
    """``Cay(Γ, S)``: vertex i is group element i; ``x ~ xs`` for ``s ∈ Ŝ∖{id}``.

    Raises ``ValueError`` if ``S`` does not generate the group (unless
    ``require_generating`` is False).
    """
    if require_generating and not generates(group, S):
        raise ValueError("S does not generate the group")
    gens = symmetrize(group, S)
    gens = gens[gens != 0]
    x = group.elements()
    if gens.size == 0:
        return build_graph(group.order, [])
    y = np.atleast_2d(group.mul(x[:, None], gens[None, :]))
    edges = np.stack([np.repeat(x, gens.size), y.ravel()], axis=1)
    return build_graph(group.order, edges)


def grid_graph(*shape: int) -> tuple[Graph, np.ndarray]:
    """Grid ``{0..s1-1} x ... x {0..sd-1}`` as an induced subgraph of Z^d.

    Vertex index is the C-order raveled coordinate; coordinates returned too.
    """
    shape = tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ValueError("side lengths must be positive")
    ids = np.arange(int(np.prod(shape))).reshape(shape)
    edges = []
    for axis in range(len(shape)):
        a = np.take(ids, np.arange(shape[axis] - 1), axis=axis).ravel()
        b = np.take(ids, np.arange(1, shape[axis]), axis=axis).ravel()
        edges.append(np.stack([a, b], axis=1))
    coords = np.stack(np.unravel_index(ids.ravel(), shape), axis=1)
    return build_graph(ids.size, np.concatenate(edges)), coords


def box_graph(*radii: int) -> tuple[Graph, np.ndarray]:
    """Induced subgraph of Z^d on ``B(n1,...,nd)`` plus vertex coordinates.

    Vertex index is the C-order raveled index of ``x + n``.
    """
    radii = tuple(int(r) for r in radii)
    if not radii or any(r < 0 for r in radii):
        raise ValueError("radii must be non-negative")
    G, coords = grid_graph(*(2 * r + 1 for r in radii))
    return G, coords - np.asarray(radii)


def elongated_torus(n: int, m: int) -> Graph:
    """``(Z/n) x (Z/m)`` with the standard generators."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    g = AbelianGroup((n, m))
    return cayley_graph(g, [(1, 0), (0, 1)])


def heisenberg_cayley(n: int) -> Graph:
    if n < 2:
        raise ValueError("n must be >= 2")
    h = HeisenbergGroup(n)
    return cayley_graph(h, h.standard_generators())


def quotient_graph(G: Graph, orbit_map) -> tuple[Graph, np.ndarray]:
    """Collapse the blocks of ``orbit_map`` (loops and multi-edges removed).

    Returns the quotient and the projection ``π`` as an array mapping each
    vertex of ``G`` to a block index ``0..k-1`` (blocks ordered by label).
    """
    labels = np.asarray(orbit_map)
    if labels.shape != (G.n,):
        raise ValueError("orbit_map must assign a block to every vertex")
    _, proj = np.unique(labels, return_inverse=True)
    proj = proj.astype(np.int64).ravel()
    k = int(proj.max()) + 1 if proj.size else 0
    return build_graph(k, proj[G.edges]), proj


def _snake(shape: tuple[int, ...]) -> np.ndarray:
    if len(shape) == 1:
        return np.arange(shape[0])[:, None]
    inner = _snake(shape[:-1])
    parts = []
    for j in range(shape[-1]):
        block = inner if j % 2 == 0 else inner[::-1]
        parts.append(np.concatenate([block, np.full((len(block), 1), j)], axis=1))
    return np.concatenate(parts)


def snake_hamiltonian(*radii: int) -> np.ndarray:
    """Boustrophedon Hamiltonian path of ``B(n1,...,nd)`` as coordinates.

    Row t of the result is the t-th vertex of the path. With all side lengths
    odd the middle row is the origin, so shifting the index by ``(N-1)/2``
    gives a path ``{-m..m} -> B`` sending 0 to 0.
    """
    radii = tuple(int(r) for r in radii)
    if not radii or any(r < 0 for r in radii):
        raise ValueError("radii must be non-negative")
    shape = tuple(2 * r + 1 for r in radii)
    return _snake(shape) - np.asarray(radii)


def box_product_embedding(radii: Sequence[int], k: int) -> tuple[int, int, np.ndarray]:
    """Bijective homomorphism ``B(m, n) -> B(n1,...,nd)`` from two snakes.

    The first ``k`` radii are threaded by one snake and the rest by another;
    returns ``(m, n, phi)`` with ``phi[a + m, b + n]`` the image coordinates
    of ``(a, b)``.
    """
    radii = tuple(int(r) for r in radii)
    if not 1 <= k < len(radii):
        raise ValueError("need 1 <= k < d")
    p1 = snake_hamiltonian(*radii[:k])
    p2 = snake_hamiltonian(*radii[k:])
    m = (len(p1) - 1) // 2
    n = (len(p2) - 1) // 2
    phi = np.concatenate([np.repeat(p1[:, None, :], len(p2), axis=1),
                          np.repeat(p2[None, :, :], len(p1), axis=0)], axis=2)
    return m, n, phi


@dataclass
class GridEmbedding:
    """Map from the grid ``{1..n1} x {1..n2}`` into a group.

    ``phi[a, j]`` (0-based) is the image element index; ``steps[j]`` is the
    element ``s_{j+1}`` linking column j to column j+1.
    """

    n1: int
    n2: int
    phi: np.ndarray
    steps: np.ndarray
    allowed: np.ndarray = field(repr=False)  # mask of Ŝ^r
    group: FiniteGroup = field(repr=False)

    def preimage_sizes(self) -> np.ndarray:
        return np.bincount(self.phi.ravel(), minlength=self.group.order)

    def grid_edges_ok(self) -> bool:
        """Every grid edge maps to a pair differing by an element of Ŝ^r."""
        g = self.group
        horiz = g.mul(g.inv(self.phi[:, :-1]), self.phi[:, 1:])
        vert = g.mul(g.inv(self.phi[:-1, :]), self.phi[1:, :])
        return bool(self.allowed[np.ravel(horiz)].all() and self.allowed[np.ravel(vert)].all())

    def preimage_bound(self, k: int, r: int) -> int:
        return 4 * (2 * k + 1) ** (2 * r)


def _open_walk(G: Graph, start: int) -> np.ndarray:
    """Double-cover walk without its final return to ``start``: still visits
    every vertex and crosses each edge at most twice."""
    w = double_cover_walk(G, start=start)
    return w[:-1] if w.size > 1 else w


def central_box_embedding(group: FiniteGroup, S, H, r: int) -> GridEmbedding:
    """Surjective grid homomorphism into ``Cay(Γ, Ŝ^r)`` through a central H.

    Column structure comes from a double-cover walk on ``Cay(Γ/H, Ŝ^r/H)``
    starting at the identity coset; the rows from a double-cover walk on the
    subgraph induced by H starting at the identity. Both walks drop their
    closing step, which is not needed for surjectivity.
    """
    S = group.as_indices(S)
    H = np.unique(group.as_indices(H))
    if 0 not in H:
        raise ValueError("H must contain the identity")
    in_h = np.zeros(group.order, dtype=bool)
    in_h[H] = True
    if not in_h[np.atleast_1d(group.mul(H[:, None], H[None, :])).ravel()].all():
        raise ValueError("H is not a subgroup")
    hs = np.atleast_2d(group.mul(H[:, None], S[None, :]))
    sh = np.atleast_2d(group.mul(S[None, :], H[:, None]))
    if not np.array_equal(hs, sh):
        raise ValueError("H is not central")
    allowed = word_ball(group, S, r)
    gens_h = H[allowed[H] & (H != 0)]
    closure = generated_subgroup(group, gens_h) if gens_h.size else (np.arange(group.order) == 0)
    if not np.array_equal(closure, in_h):
        raise ValueError("H is not r-quasiconnected")

    # G1: induced on H by Cay(Γ, Ŝ^r)
    pos_h = np.full(group.order, -1, dtype=np.int64)
    pos_h[H] = np.arange(H.size)
    if gens_h.size:
        nb = np.atleast_2d(group.mul(H[:, None], gens_h[None, :]))
        g1 = build_graph(H.size, np.stack([np.repeat(np.arange(H.size), gens_h.size),
                                           pos_h[nb.ravel()]], axis=1))
    else:
        g1 = build_graph(1, [])
    walk1 = H[_open_walk(g1, 0)]

    # G2: cosets gH labelled by their smallest element
    allx = group.elements()
    coset = np.atleast_2d(group.mul(allx[:, None], H[None, :])).min(axis=1)
    reps, coset_id = np.unique(coset, return_inverse=True)
    coset_id = coset_id.ravel()
    srt = np.flatnonzero(allowed)
    nb2 = np.atleast_2d(group.mul(allx[:, None], srt[None, :]))
    g2 = build_graph(reps.size, np.stack([np.repeat(coset_id, srt.size),
                                          coset_id[nb2.ravel()]], axis=1))
    walk2 = _open_walk(g2, int(coset_id[0]))

    steps = []
    t = 0
    cols = [t]
    for j in range(len(walk2) - 1):
        target = walk2[j + 1]
        cand = srt[coset_id[np.atleast_1d(group.mul(t, srt))] == target]
        s = int(cand.min())
        steps.append(s)
        t = int(group.mul(t, s))
        cols.append(t)
    cols = np.asarray(cols, dtype=np.int64)
    phi = np.atleast_2d(group.mul(walk1[:, None], cols[None, :]))
    emb = GridEmbedding(n1=len(walk1), n2=len(walk2), phi=phi,
                        steps=np.asarray(steps, dtype=np.int64), allowed=allowed, group=group)
    return emb
