"""Dirichlet Green functions, effective conductance and the Gaussian free field.

Conventions. For a boundary set B the Green matrix is
``G_B(u, v) = (1/deg v) * E_u[visits to v before hitting B]``, which equals
the inverse of the graph Laplacian ``D - A`` restricted to the interior
``V \\ B``. The free field has covariance ``G_B``, so its density is
proportional to ``exp(-1/2 * sum over unoriented edges (phi_x - phi_y)^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .graph import Graph, as_mask, bfs_distances
from .percolation import McEstimate, clusters, edge_uniforms

__all__ = [
    "DirichletSystem",
    "GreenOperator",
    "GFFSample",
    "RandomEnvironment",
    "dirichlet_system",
    "green_matrix",
    "green_series",
    "effective_conductance",
    "conductance_forms",
    "escape_probabilities",
    "mc_conductance",
    "sample_gff",
    "gff_hamiltonian",
    "random_environment",
    "verify_gff_bound",
    "witness_identity_check",
    "ring_boundary",
]

DENSE_LIMIT = 4000
CG_RTOL = 1e-10
STREAM_GFF = 4
STREAM_ENV = 5


def _adjacency(G: Graph) -> sp.csr_matrix:
    data = np.ones(G.indices.size)
    return sp.csr_matrix((data, G.indices, G.indptr), shape=(G.n, G.n))


def _laplacian(G: Graph) -> sp.csr_matrix:
    return (sp.diags(G.degree.astype(float)) - _adjacency(G)).tocsr()


@dataclass(frozen=True)
class DirichletSystem:
    """Graph with a killing set B; ``interior`` lists ``V \\ B`` in order and
    ``pos[v]`` is the dense index of v (or -1 on B)."""

    graph: Graph
    boundary: np.ndarray
    interior: np.ndarray
    pos: np.ndarray

    @property
    def size(self) -> int:
        return int(self.interior.size)

    def laplacian(self) -> sp.csr_matrix:
        """``(D - A)`` restricted to interior x interior."""
        L = _laplacian(self.graph)
        return L[self.interior][:, self.interior].tocsr()


def dirichlet_system(G: Graph, B) -> DirichletSystem:
    mask = as_mask(G, B)
    if not mask.any():
        raise ValueError("boundary set must be nonempty (the system is singular otherwise)")
    interior = np.flatnonzero(~mask)
    pos = np.full(G.n, -1, dtype=np.int64)
    pos[interior] = np.arange(interior.size)
    if interior.size and (bfs_distances(G, int(interior[0])) < 0).any():
        raise ValueError("graph must be connected")
    return DirichletSystem(G, mask, interior, pos)


def _solve(M: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    """Solve the SPD system ``M x = rhs``; dense Cholesky below
    ``DENSE_LIMIT`` unknowns, conjugate gradients above."""
    n = M.shape[0]
    if n == 0:
        return np.zeros_like(rhs, dtype=float)
    if n <= DENSE_LIMIT:
        c = sla.cho_factor(M.toarray(), lower=True)
        return sla.cho_solve(c, rhs)
    single = rhs.ndim == 1
    R = rhs[:, None] if single else rhs
    out = np.empty(R.shape)
    for j in range(R.shape[1]):
        x, info = spla.cg(M, R[:, j], rtol=CG_RTOL, atol=0.0, maxiter=20 * n)
        if info != 0:
            raise RuntimeError("conjugate gradients did not converge")
        out[:, j] = x
    return out[:, 0] if single else out


@dataclass(frozen=True)
class GreenOperator:
    system: DirichletSystem
    matrix: np.ndarray   # interior x interior

    def full(self) -> np.ndarray:
        """Extension by zero to V x V."""
        s = self.system
        out = np.zeros((s.graph.n, s.graph.n))
        out[np.ix_(s.interior, s.interior)] = self.matrix
        return out

    def __call__(self, u: int, v: int) -> float:
        pu, pv = self.system.pos[u], self.system.pos[v]
        if pu < 0 or pv < 0:
            return 0.0
        return float(self.matrix[pu, pv])


def green_matrix(system: DirichletSystem) -> GreenOperator:
    """``G_B`` by solving the interior Laplacian against the identity."""
    L = system.laplacian()
    M = _solve(L, np.eye(system.size))
    M = 0.5 * (M + M.T)
    M.setflags(write=False)
    return GreenOperator(system, M)


def green_series(system: DirichletSystem, tol: float = 1e-13, max_terms: int = 10**6) -> np.ndarray:
    """``G_B`` from the visit-count series ``sum_n P_B^n / deg``.

    Independent of :func:`green_matrix`; meant for small systems.
    """
    G = system.graph
    I = system.interior
    P = (sp.diags(1.0 / G.degree[I]) @ _adjacency(G)[I][:, I]).toarray()
    term = np.eye(I.size)
    total = term.copy()
    for _ in range(max_terms):
        term = term @ P
        total += term
        if np.abs(term).max() < tol:
            break
    else:
        raise RuntimeError("series did not converge")
    return total / G.degree[I][None, :]


def _disjoint_pair(G: Graph, A, B) -> tuple[np.ndarray, np.ndarray]:
    ma, mb = as_mask(G, A), as_mask(G, B)
    if not ma.any() or not mb.any():
        raise ValueError("A and B must be nonempty")
    if (ma & mb).any():
        raise ValueError("A and B must be disjoint")
    return ma, mb


def _potential(G: Graph, ma: np.ndarray, mb: np.ndarray) -> np.ndarray:
    """Harmonic u on V with u = 1 on A and u = 0 on B (Laplacian solve)."""
    free = np.flatnonzero(~(ma | mb))
    u = ma.astype(float)
    if free.size:
        L = _laplacian(G)
        rhs = -(L[free][:, np.flatnonzero(ma)] @ np.ones(int(ma.sum())))
        u[free] = _solve(L[free][:, free].tocsr(), np.asarray(rhs).ravel())
    return u


def _hitting(G: Graph, ma: np.ndarray, mb: np.ndarray, towards: np.ndarray) -> np.ndarray:
    """``h(y) = P_y(hit `towards` before the other set)`` from the transition
    matrix (a non-symmetric sparse LU solve)."""
    stop = ma | mb
    free = np.flatnonzero(~stop)
    h = towards.astype(float)
    if free.size:
        P = (sp.diags(1.0 / G.degree) @ _adjacency(G)).tocsr()
        Pff = P[free][:, free]
        rhs = P[free][:, np.flatnonzero(towards)] @ np.ones(int(towards.sum()))
        M = (sp.identity(free.size) - Pff).tocsc()
        h[free] = spla.spsolve(M, np.asarray(rhs).ravel())
    return h


def escape_probabilities(G: Graph, A, B) -> np.ndarray:
    """``t_x = deg(x) P_x(τ_B < τ_A^+)`` for every x (zero outside A)."""
    ma, mb = _disjoint_pair(G, A, B)
    h = _hitting(G, ma, mb, mb)
    src = np.repeat(np.arange(G.n), G.degree)
    t = np.bincount(src, weights=h[G.indices], minlength=G.n)
    return np.where(ma, t, 0.0)


def effective_conductance(G: Graph, A, B, method: str = "flow") -> float:
    """``C_eff(A <-> B)`` with unit edge conductances.

    ``flow``: total current out of A under the unit harmonic potential.
    ``hitting``: ``sum_{a in A} deg(a) P_a(τ_B < τ_A^+)``.
    ``hitting_b``: the same sum taken from the B side.
    """
    ma, mb = _disjoint_pair(G, A, B)
    if method == "flow":
        u = _potential(G, ma, mb)
        x, y = G.edges[:, 0], G.edges[:, 1]
        cur = u[x] - u[y]
        out = np.where(ma[x] & ~ma[y], cur, 0.0) - np.where(ma[y] & ~ma[x], cur, 0.0)
        return float(out.sum())
    if method == "hitting":
        return float(escape_probabilities(G, ma, mb).sum())
    if method == "hitting_b":
        return float(escape_probabilities(G, mb, ma).sum())
    raise ValueError(f"unknown method {method!r}")


def conductance_forms(G: Graph, A, B) -> dict:
    return {m: effective_conductance(G, A, B, m) for m in ("flow", "hitting", "hitting_b")}


def mc_conductance(G: Graph, A, B, walks: int, seed: int) -> dict:
    """Random-walk estimate of ``sum_a deg(a) P_a(τ_B < τ_A^+)``."""
    ma, mb = _disjoint_pair(G, A, B)
    label = np.zeros(G.n, dtype=np.int8)
    label[ma] = 1
    label[mb] = 2
    est = 0.0
    var = 0.0
    for i, a in enumerate(np.flatnonzero(ma)):
        if G.degree[a] == 0:
            continue
        s = int(np.random.SeedSequence([seed, int(a)]).generate_state(1)[0])
        k = _kernels.escape_walks(G.indptr, G.indices, int(a), label, walks, s)
        ph = k / walks
        d = float(G.degree[a])
        est += d * ph
        var += d * d * ph * (1 - ph) / walks
    return {"estimate": est, "stderr": math.sqrt(var), "walks": walks, "seed": seed}


@dataclass(frozen=True)
class GFFSample:
    """Field values on V (``values[..., v]``); exactly zero on B."""

    values: np.ndarray
    seed: int


def sample_gff(green: GreenOperator, seed: int, size: int | None = None) -> GFFSample:
    """``phi = L z`` with ``L L^T = G_B`` (Cholesky) and z standard normal.

    With ``size`` given, returns that many independent samples stacked on
    the first axis.
    """
    s = green.system
    n_int = s.size
    shape = (1 if size is None else size, s.graph.n)
    out = np.zeros(shape)
    if n_int:
        try:
            Lf = np.linalg.cholesky(green.matrix)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Green matrix is not positive definite") from exc
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, STREAM_GFF])))
        z = rng.standard_normal((shape[0], n_int))
        out[:, s.interior] = z @ Lf.T
    return GFFSample(out[0] if size is None else out, seed)


def gff_hamiltonian(system: DirichletSystem, phi: np.ndarray) -> float:
    """``1/2 * sum over unoriented edges (phi_x - phi_y)^2`` for phi zero on B.

    The free-field density is proportional to ``exp(-H)``.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(phi[system.boundary] != 0):
        raise ValueError("field must vanish on the boundary")
    e = system.graph.edges
    return 0.5 * float(np.sum((phi[e[:, 0]] - phi[e[:, 1]]) ** 2))


@dataclass(frozen=True)
class RandomEnvironment:
    probabilities: np.ndarray   # per canonical edge


def random_environment(G: Graph, phi) -> RandomEnvironment:
    """``p_e = 1 - exp(-2 (phi_x + 1)_+ (phi_y + 1)_+)`` for each edge."""
    v = phi.values if isinstance(phi, GFFSample) else np.asarray(phi, dtype=float)
    s = np.maximum(v + 1.0, 0.0)
    prod = s[G.edges[:, 0]] * s[G.edges[:, 1]]
    return RandomEnvironment(-np.expm1(-2.0 * prod))


def ring_boundary(coords: np.ndarray) -> np.ndarray:
    """Mask of the vertices on the outer face of a grid given its coordinates."""
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    return np.any((coords == lo) | (coords == hi), axis=1)


def verify_gff_bound(G: Graph, B, A, outer: int, inner: int, seed: int,
                     green: GreenOperator | None = None, z: float = 2.0) -> dict:
    """Nested Monte Carlo check of
    ``E[P_{p(phi)}(A <-> B)] >= 1 - exp(-C_eff(A <-> B) / 2)``.

    Outer loop: free-field samples with boundary B. Inner loop: ``inner``
    inhomogeneous percolation trials in the environment ``p(phi)``. The
    variance of the grand mean is split into an inner part (binomial noise
    of the inner means) and the outer remainder; the pass rule uses the
    total.
    """
    ma, mb = _disjoint_pair(G, A, B)
    if outer < 2 or inner < 1:
        raise ValueError("need outer >= 2 and inner >= 1")
    if green is None:
        green = green_matrix(dirichlet_system(G, mb))
    ceff = effective_conductance(G, ma, mb)
    bound = -math.expm1(-ceff / 2)
    phis = sample_gff(green, seed, size=outer).values
    means = np.empty(outer)
    for i in range(outer):
        p = random_environment(G, phis[i]).probabilities
        hits = 0
        for j in range(inner):
            u = edge_uniforms(G.num_edges, seed, i * inner + j, stream=STREAM_ENV)
            f = clusters(G, u < p)
            hits += bool(np.intersect1d(f.parent[ma], f.parent[mb]).size)
        means[i] = hits / inner
    est = float(means.mean())
    var_total = float(means.var(ddof=1)) / outer
    var_inner = float(np.mean(means * (1 - means)) / max(inner - 1, 1)) / outer if inner > 1 else 0.0
    var_inner = min(var_inner, var_total)
    se_total = math.sqrt(var_total)
    return {
        "bound": bound,
        "estimate": est,
        "stderr_outer": math.sqrt(var_total - var_inner),
        "stderr_inner": math.sqrt(var_inner),
        "stderr_total": se_total,
        "c_eff": ceff,
        "outer": outer,
        "inner": inner,
        "seed": seed,
        "pass": bool(est >= bound - z * se_total),
    }


def witness_identity_check(green: GreenOperator, A, B=None) -> float:
    """Largest deviation in the last-exit identities

    ``sum_{y in A} t_y G_B(x, y) = 1`` for x in A and ``sum t = C_eff``,
    where ``t_x = deg(x) P_x(τ_B < τ_A^+)``. B defaults to the Green
    operator's boundary and must equal it if given.
    """
    s = green.system
    G = s.graph
    mb = s.boundary if B is None else as_mask(G, B)
    if not np.array_equal(mb, s.boundary):
        raise ValueError("B must be the Dirichlet boundary of the Green operator")
    ma, mb = _disjoint_pair(G, A, mb)
    t = escape_probabilities(G, ma, mb)
    ia = s.pos[np.flatnonzero(ma)]
    lhs = green.matrix[np.ix_(ia, ia)] @ t[ma]
    dev = float(np.abs(lhs - 1.0).max())
    ceff = effective_conductance(G, ma, mb, "flow")
    return max(dev, abs(float(t.sum()) - ceff))
