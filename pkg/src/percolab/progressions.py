"""Exact additive combinatorics in finite Abelian groups.

Sets are boolean masks over the element indices of an
:class:`~percolab.groups.AbelianGroup`.  Sumsets are computed exactly: by
translating masks for small summands and by circular FFT convolution (with
a 1/2 threshold on integer counts) otherwise.

The centrepiece is :func:`extract_progression`, which follows the inductive
construction of a progression ``P`` with ``P ⊆ rÂ ⊆ C_k(P + Q + Â)`` that is
proper modulo a symmetric set ``Q``; every result is certified before it is
returned.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .groups import AbelianGroup

__all__ = [
    "CertificationError",
    "BudgetExceeded",
    "Progression",
    "ExtractionResult",
    "cover_constant",
    "mask_of",
    "symmetric_set",
    "minkowski_sum",
    "sumset_power",
    "hat",
    "progression_elements",
    "is_proper",
    "is_proper_mod",
    "is_divisible",
    "word_distances",
    "extract_progression",
    "verify_cover",
    "brute_force_max_proper",
    "random_instance",
    "random_corpus",
]

_DIRECT_LIMIT = 24


class CertificationError(RuntimeError):
    """An extraction step failed one of its exact checks."""


class BudgetExceeded(RuntimeError):
    """Instance too large for exact enumeration under the given budget."""


def cover_constant(k: int) -> int:
    """``C_k = 2^{6k} (k!)^3``."""
    return 2 ** (6 * k) * math.factorial(k) ** 3


def mask_of(group: AbelianGroup, elements) -> np.ndarray:
    mask = np.zeros(group.order, dtype=bool)
    idx = group.as_indices(elements)
    mask[idx] = True
    return mask


def symmetric_set(group: AbelianGroup, elements) -> np.ndarray:
    """Mask of ``E ∪ {0} ∪ -E``."""
    idx = group.as_indices(elements)
    mask = np.zeros(group.order, dtype=bool)
    mask[0] = True
    mask[idx] = True
    mask[np.atleast_1d(group.neg(idx))] = True
    return mask


def hat(group: AbelianGroup, gens) -> np.ndarray:
    return symmetric_set(group, gens)


def _translate(group: AbelianGroup, mask: np.ndarray, b: int) -> np.ndarray:
    shift = tuple(int(c) for c in group.coords(b))
    return np.roll(mask.reshape(group.moduli), shift, axis=tuple(range(group.rank))).ravel()


def minkowski_sum(group: AbelianGroup, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``A + B`` for masks ``A``, ``B``."""
    na, nb = int(A.sum()), int(B.sum())
    if na == 0 or nb == 0:
        return np.zeros(group.order, dtype=bool)
    if nb > na:
        A, B, na, nb = B, A, nb, na
    if nb <= _DIRECT_LIMIT:
        out = np.zeros(group.order, dtype=bool)
        for b in np.flatnonzero(B):
            out |= _translate(group, A, int(b))
        return out
    shape = group.moduli
    fa = sfft.rfftn(A.reshape(shape).astype(np.float64), s=shape)
    fb = sfft.rfftn(B.reshape(shape).astype(np.float64), s=shape)
    conv = sfft.irfftn(fa * fb, s=shape)
    return (conv > 0.5).ravel()


def sumset_power(group: AbelianGroup, A: np.ndarray, m: int) -> np.ndarray:
    """``mA``; ``0A = {0}``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    result = np.zeros(group.order, dtype=bool)
    result[0] = True
    if m == 0:
        return result
    contains_zero = bool(A[0])
    base = A.copy()
    while m:
        if m & 1:
            result = minkowski_sum(group, result, base)
        m >>= 1
        if m:
            nxt = minkowski_sum(group, base, base)
            if contains_zero and np.array_equal(nxt, base):
                # base is a subgroup-like fixed point: every further power equals it
                return minkowski_sum(group, result, base)
            base = nxt
    return result


@dataclass(frozen=True)
class Progression:
    """``P_{a_1..a_k}(L_1..L_k)``; lengths may be non-integers."""

    group: AbelianGroup
    generators: tuple
    lengths: tuple

    def __post_init__(self):
        gens = tuple(int(g) for g in self.group.as_indices(self.generators))
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "lengths", tuple(self.lengths))
        if len(gens) != len(self.lengths):
            raise ValueError("need one length per generator")
        if any(L < 0 for L in self.lengths):
            raise ValueError("lengths must be non-negative")

    @property
    def k(self) -> int:
        return len(self.generators)

    @property
    def int_lengths(self) -> tuple[int, ...]:
        return tuple(int(math.floor(L)) for L in self.lengths)

    @property
    def nominal_size(self) -> int:
        return int(np.prod([2 * L + 1 for L in self.int_lengths], dtype=object))

    def scaled(self, m) -> "Progression":
        return Progression(self.group, self.generators, tuple(m * L for L in self.lengths))


def _line(group: AbelianGroup, a: int, L) -> np.ndarray:
    L = int(math.floor(L))
    ell = np.arange(-L, L + 1)
    mask = np.zeros(group.order, dtype=bool)
    mask[np.atleast_1d(group.scale(ell, a))] = True
    return mask


def progression_elements(P: Progression) -> np.ndarray:
    """Mask of the element set of ``P``."""
    out = np.zeros(P.group.order, dtype=bool)
    out[0] = True
    for a, L in zip(P.generators, P.lengths):
        out = minkowski_sum(P.group, out, _line(P.group, a, L))
    return out


def is_proper(P: Progression) -> bool:
    """True iff every element has exactly one representation."""
    total = P.nominal_size
    if total > P.group.order:
        return False
    ranges = [np.arange(-L, L + 1) for L in P.int_lengths]
    if not ranges:
        return True
    coords = P.group.coords(np.asarray(P.generators, dtype=np.int64))
    acc = np.zeros((1, P.group.rank), dtype=np.int64)
    for r, c in zip(ranges, coords):
        acc = (acc[:, None, :] + r[None, :, None] * c[None, None, :]).reshape(-1, P.group.rank)
    idx = P.group.index(acc)
    return np.unique(idx).size == total


def is_proper_mod(P: Progression, Q: np.ndarray) -> bool:
    """Proper, and ``x - y ∉ Q`` for distinct ``x, y ∈ P``."""
    if not is_proper(P):
        return False
    diffs = progression_elements(P.scaled(2))
    hits = diffs & Q
    hits[0] = False
    return not hits.any()


def is_divisible(group: AbelianGroup, A: np.ndarray, Q: np.ndarray) -> bool:
    """Whether congruence mod ``Q`` is an addition-respecting equivalence on ``A``.

    Transitivity is checked by grouping ``A`` into components of the relation
    ``x - y ∈ Q`` and requiring each component to be a clique. Compatibility
    with addition reduces to ``D + D ⊆ Q`` where ``D`` is the set of
    differences ``x' - x ∈ Q`` realised inside ``A``.
    """
    a_idx = np.flatnonzero(A)
    q_idx = np.flatnonzero(Q)
    if a_idx.size == 0:
        return True
    pos = np.full(group.order, -1, dtype=np.int64)
    pos[a_idx] = np.arange(a_idx.size)
    realised = []
    us, vs = [], []
    for q in q_idx:
        shifted = np.atleast_1d(group.add(a_idx, int(q)))
        hit = A[shifted]
        if hit.any():
            realised.append(int(q))
            us.append(pos[a_idx[hit]])
            vs.append(pos[shifted[hit]])
    u = np.concatenate(us)
    v = np.concatenate(vs)
    # components of the relation graph via scipy; relation pairs are ordered
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    graph = coo_matrix((np.ones(u.size), (u, v)), shape=(a_idx.size, a_idx.size))
    _, comp = connected_components(graph, directed=False)
    comp_sizes = np.bincount(comp)
    related_pairs = np.unique(u * a_idx.size + v).size
    if related_pairs != int((comp_sizes.astype(np.int64) ** 2).sum()):
        return False
    D = np.zeros(group.order, dtype=bool)
    D[realised] = True
    return not (minkowski_sum(group, D, D) & ~Q).any()


def _signed_generators(group: AbelianGroup, gens: Sequence[int]):
    out = []
    for j, a in enumerate(np.atleast_1d(group.as_indices(gens))):
        out.append((j, 1, int(a)))
        out.append((j, -1, int(group.neg(int(a)))))
    return out


def word_distances(group: AbelianGroup, gens: Sequence[int], sources: np.ndarray | None = None,
                   with_coefficients: bool = False):
    """Word length w.r.t. ``±gens`` from a source set (default ``{0}``).

    Unreachable elements get -1. With ``with_coefficients`` (single source 0
    only) also returns, per element, the coefficient vector ``m`` of the BFS
    path that discovered it, so that ``Σ m_i a_i`` is the element and
    ``Σ|m_i|`` is at most its word length.
    """
    if sources is None:
        sources = np.zeros(group.order, dtype=bool)
        sources[0] = True
    dist = np.full(group.order, -1, dtype=np.int64)
    dist[sources] = 0
    k = len(gens)
    coef = np.zeros((group.order, k), dtype=np.int64) if with_coefficients else None
    frontier = np.flatnonzero(sources)
    level = 0
    moves = _signed_generators(group, gens)
    while frontier.size:
        level += 1
        new_parts = []
        for j, sign, g in moves:
            cand = np.atleast_1d(group.add(frontier, g))
            fresh = dist[cand] < 0
            if not fresh.any():
                continue
            cand, par = cand[fresh], frontier[fresh]
            cand, first = np.unique(cand, return_index=True)
            par = par[first]
            dist[cand] = level
            if coef is not None:
                coef[cand] = coef[par]
                coef[cand, j] += sign
            new_parts.append(cand)
        frontier = np.concatenate(new_parts) if new_parts else np.zeros(0, dtype=np.int64)
    if with_coefficients:
        return dist, coef
    return dist


@dataclass
class ExtractionResult:
    """Lengths ``L_i`` (in the caller's generator order) plus certificates."""

    group: AbelianGroup
    generators: tuple
    r: int
    lengths: tuple
    order: tuple
    proper_mod_Q: bool
    subset_of_ball: bool
    cover_constant_used: int
    cover_ok: bool
    trace: list = field(default_factory=list, repr=False)

    @property
    def progression(self) -> Progression:
        return Progression(self.group, self.generators, self.lengths)

    @property
    def volume(self) -> int:
        return int(np.prod([2 * L + 1 for L in self.lengths]))

    @property
    def certified(self) -> bool:
        return self.proper_mod_Q and self.subset_of_ball and self.cover_ok

    def to_dict(self) -> dict:
        return {
            "moduli": list(self.group.moduli),
            "generators": [list(self.group.element(g)) for g in self.generators],
            "r": self.r,
            "lengths": list(self.lengths),
            "order": list(self.order),
            "proper_mod_Q": self.proper_mod_Q,
            "subset_of_ball": self.subset_of_ball,
            "cover_constant_used": self.cover_constant_used,
            "cover_ok": self.cover_ok,
            "volume": self.volume,
            "trace": self.trace,
        }


def _largest_proper_line(group: AbelianGroup, a: int, Q: np.ndarray, r: int) -> int:
    lo, hi = 0, r  # P_a(0) = {0} is always proper mod Q
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if is_proper_mod(Progression(group, (a,), (mid,)), Q):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _extract(group: AbelianGroup, gens: list[int], Q: np.ndarray, r: int,
             trace: list, depth: int) -> list[int]:
    k = len(gens)
    if k == 1:
        L = _largest_proper_line(group, gens[0], Q, r)
        trace.append({"depth": depth, "k": 1, "r": r, "L": L})
        return [L]

    dist, coef = word_distances(group, gens, with_coefficients=True)
    dist_q = word_distances(group, gens, sources=Q)
    # x ∈ ρÂ \ ((ρ-1)Â + Q)  <=>  dist(x) = dist_q(x) = ρ
    sharp = (dist >= 1) & (dist == dist_q) & (dist <= r)
    if not sharp.any():
        trace.append({"depth": depth, "k": k, "r": r, "reduced_to": 0})
        return [0] * k
    r_eff = int(dist[sharp].max())
    x = int(np.flatnonzero(sharp & (dist == r_eff))[0])
    m = coef[x]
    if int(np.abs(m).sum()) != r_eff or int(group.index(m @ group.coords(np.asarray(gens)))) != x:
        raise CertificationError("witness representation is not geodesic")
    absm = np.abs(m)
    top = int(np.flatnonzero(absm == absm.max())[-1])
    mk = int(absm[top])
    Lk = mk // (4 * k)
    a_top = gens[top]
    rest = [g for j, g in enumerate(gens) if j != top]
    q_next = minkowski_sum(group, _line(group, a_top, mk / 2), Q)

    dist_rest = word_distances(group, rest)
    dist_rest_q = word_distances(group, rest, sources=q_next)
    inner = (dist_rest >= 0) & (dist_rest <= Lk)
    n = int(dist_rest_q[inner].max())
    ball_n = (dist_rest >= 0) & (dist_rest <= n)
    if not is_divisible(group, ball_n, q_next):
        raise CertificationError(f"radius-{n} ball of the remaining generators is not "
                                 "divisible by the enlarged quotient set")
    trace.append({"depth": depth, "k": k, "r": r, "r_eff": r_eff,
                  "witness": [int(c) for c in group.coords(x)],
                  "coefficients": [int(c) for c in m], "pivot": top, "m_k": mk,
                  "L_k": Lk, "n": n})
    sub = _extract(group, rest, q_next, n, trace, depth + 1)
    out = []
    it = iter(sub)
    for j in range(k):
        out.append(Lk if j == top else next(it))
    return out


def _pivot_order(trace: list, k: int) -> tuple[int, ...]:
    remaining = list(range(k))
    tail = []
    for step in trace:
        if "pivot" in step:
            tail.append(remaining.pop(step["pivot"]))
    return tuple(remaining + tail[::-1])


def extract_progression(group: AbelianGroup, generators, Q=None, r: int = 1,
                        certify: bool = True, cover_budget: int = 2_000_000) -> ExtractionResult:
    """Find ``L_i ≤ r`` with ``P = P_a(L)`` proper mod ``Q`` and ``P ⊆ rÂ ⊆ C_k(P+Q+Â)``.

    ``Q`` is a mask (or element list) of a symmetric set containing 0;
    defaults to ``{0}``. Raises ``ValueError`` if ``rÂ`` is not divisible by
    ``Q`` and :class:`CertificationError` if any certificate fails.
    """
    gens = [int(g) for g in group.as_indices(generators)]
    if not gens:
        raise ValueError("need at least one generator")
    if r < 1:
        raise ValueError("r must be >= 1")
    if Q is None:
        Q = mask_of(group, [0])
    elif not (isinstance(Q, np.ndarray) and Q.dtype == bool):
        Q = mask_of(group, Q)
    if not Q[0] or not np.array_equal(Q, Q[np.atleast_1d(group.neg(np.arange(group.order)))]):
        raise ValueError("Q must be symmetric and contain 0")
    A_hat = hat(group, gens)
    ball = sumset_power(group, A_hat, r)
    if not is_divisible(group, ball, Q):
        raise ValueError("rÂ is not divisible by Q")
    trace: list = []
    lengths = tuple(int(L) for L in _extract(group, gens, Q, r, trace, 0))
    k = len(gens)
    C = cover_constant(k)
    P = Progression(group, tuple(gens), lengths)
    result = ExtractionResult(group, tuple(gens), r, lengths, _pivot_order(trace, k),
                              proper_mod_Q=False, subset_of_ball=False,
                              cover_constant_used=C, cover_ok=False, trace=trace)
    if not certify:
        return result
    result.proper_mod_Q = is_proper_mod(P, Q)
    ok, _ = verify_cover(group, P, Q, gens, r, C, budget=cover_budget)
    pe = progression_elements(P)
    result.subset_of_ball = not (pe & ~ball).any()
    result.cover_ok = ok
    if not result.certified:
        raise CertificationError(f"extraction failed certification: {result}")
    return result


def verify_cover(group: AbelianGroup, P: Progression, Q, A, r: int, C: int,
                 budget: int = 2_000_000) -> tuple[bool, int | None]:
    """Check ``P ⊆ rÂ`` and ``rÂ ⊆ C(P + Q + Â)`` exactly.

    Returns ``(True, None)`` or ``(False, witness)`` where the witness is an
    element violating one of the containments.
    """
    if group.order > budget:
        raise BudgetExceeded(f"|Γ| = {group.order} exceeds budget {budget}")
    if not (isinstance(Q, np.ndarray) and Q.dtype == bool):
        Q = mask_of(group, Q)
    A_hat = hat(group, A)
    ball = sumset_power(group, A_hat, r)
    pe = progression_elements(P)
    bad = pe & ~ball
    if bad.any():
        return False, int(np.flatnonzero(bad)[0])
    X = minkowski_sum(group, minkowski_sum(group, pe, Q), A_hat)
    big = sumset_power(group, X, C)
    bad = ball & ~big
    if bad.any():
        return False, int(np.flatnonzero(bad)[0])
    return True, None


def brute_force_max_proper(group: AbelianGroup, A, Q=None, r: int = 1,
                           budget: int = 200_000) -> tuple[int, ...]:
    """Largest-volume ``L ∈ {0..r}^k`` with ``P_A(L)`` proper mod ``Q``.

    Ties go to the lexicographically smallest length vector.
    """
    gens = tuple(int(g) for g in group.as_indices(A))
    k = len(gens)
    if (r + 1) ** k > budget:
        raise BudgetExceeded(f"(r+1)^k = {(r + 1) ** k} exceeds budget {budget}")
    if Q is None:
        Q = mask_of(group, [0])
    elif not (isinstance(Q, np.ndarray) and Q.dtype == bool):
        Q = mask_of(group, Q)
    best, best_vol = (0,) * k, 1
    for L in itertools.product(range(r + 1), repeat=k):
        vol = int(np.prod([2 * l + 1 for l in L]))
        if vol <= best_vol or vol > group.order:
            continue
        if is_proper_mod(Progression(group, gens, L), Q):
            best, best_vol = L, vol
    return best


def random_instance(rng: np.random.Generator, max_order: int = 4096, max_k: int = 3,
                    subgroup_q: bool | None = None) -> dict:
    """One random ``(Γ, A, Q, r)`` with ``Q`` either ``{0}`` or a subgroup."""
    while True:
        d = int(rng.integers(1, 4))
        moduli = []
        budget = max_order
        for _ in range(d):
            hi = min(budget, 64 if d > 1 else max_order)
            if hi < 2:
                break
            m = int(rng.integers(2, hi + 1))
            moduli.append(m)
            budget //= m
        if moduli:
            break
    group = AbelianGroup(moduli)
    k = int(rng.integers(1, max_k + 1))
    gens = [int(g) for g in rng.integers(1, group.order, size=k)] if group.order > 1 else [0] * k
    if subgroup_q is None:
        subgroup_q = bool(rng.integers(0, 2))
    if subgroup_q:
        q = int(rng.integers(0, group.order))
        Q = np.zeros(group.order, dtype=bool)
        Q[np.atleast_1d(group.scale(np.arange(group.order), q))] = True
    else:
        Q = mask_of(group, [0])
    dist = word_distances(group, gens)
    diam = max(int(dist.max()), 1)
    r = int(rng.integers(1, diam + 1))
    return {"group": group, "generators": gens, "Q": Q, "r": r, "subgroup_q": subgroup_q}


def random_corpus(seed: int, count: int, max_order: int = 4096, max_k: int = 3) -> list[dict]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, max_order=max_order, max_k=max_k) for _ in range(count)]
