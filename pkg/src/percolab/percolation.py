"""Bernoulli bond percolation: sampling, clusters and Monte Carlo estimators.

Randomness is keyed, not sequential: the uniforms for trial ``t`` under
master seed ``s`` come from a Philox generator seeded by
``SeedSequence([s, stream, t])``. Edge e is open at level p iff its uniform
is below p, so one seed gives a monotone coupling across all p, and any
subset of trials can be recomputed in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .graph import Graph, as_mask

__all__ = [
    "edge_uniforms",
    "PercSample",
    "ClusterForest",
    "McEstimate",
    "PcEstimate",
    "sample_config",
    "clusters",
    "mc_giant",
    "giant_thresholds",
    "estimate_pc",
    "quantile_pc",
    "two_point",
    "set_to_set",
    "left_right_crossing",
    "theta_power_check",
    "cluster_connect_check",
]

STREAM_MAIN = 0


def edge_uniforms(num: int, seed: int, trial: int = 0, stream: int = STREAM_MAIN) -> np.ndarray:
    """The ``num`` uniforms of (seed, stream, trial)."""
    bitgen = np.random.Philox(np.random.SeedSequence([int(seed), int(stream), int(trial)]))
    return np.random.Generator(bitgen).random(num)


def _check_p(p):
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
        raise ValueError("retention probability must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class PercSample:
    """One configuration: ``open_edges[e]`` is True iff edge e is retained."""

    open_edges: np.ndarray
    p: float | np.ndarray
    seed: int
    trial: int = 0

    @property
    def num_open(self) -> int:
        return int(self.open_edges.sum())


def sample_config(G: Graph, p, seed: int, trial: int = 0, stream: int = STREAM_MAIN) -> PercSample:
    """I.i.d. Bernoulli(p) edges; ``p`` may be a per-edge vector."""
    pa = _check_p(p)
    if pa.ndim and pa.shape != (G.num_edges,):
        raise ValueError("per-edge probabilities must have one entry per edge")
    u = edge_uniforms(G.num_edges, seed, trial, stream)
    return PercSample(u < pa, p, seed, trial)


@dataclass
class ClusterForest:
    """Disjoint-set forest after full path compression.

    ``parent[v]`` is the root of v's cluster; ``size[r]`` is the cluster size
    at roots and 0 elsewhere.
    """

    parent: np.ndarray
    rank: np.ndarray
    size: np.ndarray

    @property
    def root(self) -> np.ndarray:
        return self.parent

    @property
    def max_size(self) -> int:
        return int(self.size.max()) if self.size.size else 0

    def cluster_size(self, v: int) -> int:
        return int(self.size[self.parent[v]])

    def connected(self, u: int, v: int) -> bool:
        return bool(self.parent[u] == self.parent[v])

    def sizes(self) -> np.ndarray:
        """Cluster sizes, largest first."""
        return np.sort(self.size[self.size > 0])[::-1]

    def cluster_of(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.parent == self.parent[v])


def _forest(G: Graph, open_edges: np.ndarray) -> ClusterForest:
    parent, rank, size = _kernels.union_find(G.n, G.edges[:, 0], G.edges[:, 1], open_edges)
    return ClusterForest(parent, rank, size)


def clusters(G: Graph, sample) -> ClusterForest:
    """Open clusters of ``sample`` (a :class:`PercSample` or an edge mask)."""
    open_edges = sample.open_edges if isinstance(sample, PercSample) else np.asarray(sample, dtype=bool)
    if open_edges.shape != (G.num_edges,):
        raise ValueError("configuration does not match the graph's edge count")
    return _forest(G, open_edges)


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    trials: int
    seed: int
    successes: int = 0

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int) -> "McEstimate":
        if trials <= 0:
            raise ValueError("trials must be positive")
        phat = successes / trials
        return cls(phat, math.sqrt(phat * (1 - phat) / trials), trials, seed, successes)

    def interval(self, z: float = 2.0) -> tuple[float, float]:
        return self.estimate - z * self.stderr, self.estimate + z * self.stderr

    def as_row(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr,
                "trials": self.trials, "seed": self.seed}


def _run_trials(G: Graph, p, trials: int, seed: int, event: Callable[[ClusterForest], bool],
                start: int = 0) -> int:
    pa = _check_p(p)
    hits = 0
    for t in range(start, start + trials):
        u = edge_uniforms(G.num_edges, seed, t)
        if event(_forest(G, u < pa)):
            hits += 1
    return hits


def _giant_target(G: Graph, alpha: float) -> int:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return max(1, math.ceil(alpha * G.n - 1e-12))


def mc_giant(G: Graph, p, alpha: float, trials: int, seed: int, start: int = 0) -> McEstimate:
    """Estimate ``P_p(some open cluster has ≥ ⌈α|V|⌉ vertices)``."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    target = _giant_target(G, alpha)
    hits = _run_trials(G, p, trials, seed, lambda f: f.max_size >= target, start)
    return McEstimate.from_counts(hits, trials, seed)


def giant_thresholds(G: Graph, alpha: float, trials: int, seed: int, start: int = 0) -> np.ndarray:
    """Per-trial level at which the giant cluster appears (Newman-Ziff).

    Uses the same uniforms as :func:`mc_giant`, so for each trial the giant
    exists at p iff ``threshold < p``; 2.0 marks "never".
    """
    target = _giant_target(G, alpha)
    chunk = max(1, min(trials, 2**24 // max(G.num_edges, 1)))
    out = []
    for c0 in range(start, start + trials, chunk):
        c1 = min(c0 + chunk, start + trials)
        U = np.stack([edge_uniforms(G.num_edges, seed, t) for t in range(c0, c1)])
        out.append(_kernels.giant_thresholds(G.n, G.edges[:, 0], G.edges[:, 1], U, target))
    return np.concatenate(out) if out else np.zeros(0)


@dataclass(frozen=True)
class PcEstimate:
    """Result of a critical-probability search.

    ``lo``/``hi`` bracket the crossing; ``resolved`` is False when a probe's
    CI could not exclude q within the trial cap, in which case the bracket is
    the widest one consistent with the probes and ``trials_needed`` estimates
    the sample size that would have resolved the ambiguous probe.
    """

    p: float
    lo: float
    hi: float
    lo_estimate: McEstimate | None
    hi_estimate: McEstimate | None
    resolved: bool
    trials_needed: int = 0
    probes: tuple = ()


def estimate_pc(G: Graph, alpha: float, q: float, tol: float = 0.01, trials: int = 200,
                seed: int = 0, max_trials: int = 3200, z: float = 2.0) -> PcEstimate:
    """Stochastic bisection for ``p_c(G, α, q)``.

    Each probe adds batches of ``trials`` (common random numbers across
    probes) until the z-CI excludes q or ``max_trials`` is reached.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = _giant_target(G, alpha)
    lo, hi = 0.0, 1.0
    lo_est = hi_est = None
    probes = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        done = hits = 0
        while True:
            hits += _run_trials(G, mid, trials, seed, lambda f: f.max_size >= target, start=done)
            done += trials
            est = McEstimate.from_counts(hits, done, seed)
            a, b = est.interval(z)
            if b < q or a > q or done >= max_trials:
                break
        probes.append((mid, est.estimate, est.stderr, done))
        if est.estimate - z * est.stderr > q:
            hi, hi_est = mid, est
        elif est.estimate + z * est.stderr < q:
            lo, lo_est = mid, est
        else:
            gap = abs(est.estimate - q)
            var = max(est.estimate * (1 - est.estimate), 1.0 / done)
            needed = int(math.ceil(z * z * var / gap ** 2)) if gap > 0 else -1
            return PcEstimate(mid, lo, hi, lo_est, hi_est, False, needed, tuple(probes))
    return PcEstimate(0.5 * (lo + hi), lo, hi, lo_est, hi_est, True, 0, tuple(probes))


def quantile_pc(thresholds: np.ndarray, q: float, level: float = 0.95) -> tuple[float, float, float]:
    """``p_c(α, q)`` from Newman-Ziff thresholds plus an order-statistic CI.

    ``P_p(giant) ≥ q`` first holds at the ``⌈qN⌉``-th smallest threshold.
    """
    from scipy.stats import binom

    t = np.sort(np.asarray(thresholds))
    n = t.size
    k = max(1, math.ceil(q * n - 1e-12))
    a = (1 - level) / 2
    lo_k = max(1, int(binom.ppf(a, n, q)))
    hi_k = min(n, int(binom.ppf(1 - a, n, q)) + 1)
    return float(t[k - 1]), float(t[lo_k - 1]), float(t[hi_k - 1])


def two_point(G: Graph, p, x: int, y: int, trials: int, seed: int) -> McEstimate:
    """Estimate ``P_p(x ↔ y)``."""
    for v in (x, y):
        if not 0 <= v < G.n:
            raise ValueError("vertex out of range")
    hits = _run_trials(G, p, trials, seed, lambda f: f.parent[x] == f.parent[y])
    return McEstimate.from_counts(hits, trials, seed)


def set_to_set(G: Graph, p, A, B, trials: int, seed: int) -> McEstimate:
    """Estimate ``P_p(A ↔ B)`` (some open cluster meets both sets)."""
    ma, mb = as_mask(G, A), as_mask(G, B)

    def event(f):
        return bool(np.intersect1d(f.parent[ma], f.parent[mb], assume_unique=False).size)

    hits = _run_trials(G, p, trials, seed, event)
    return McEstimate.from_counts(hits, trials, seed)


def left_right_crossing(G: Graph, coords: np.ndarray, p, trials: int, seed: int,
                        axis: int = 0) -> McEstimate:
    """Estimate the probability of an open crossing between the two faces
    ``coords[:, axis] == min`` and ``== max`` of a box."""
    c = coords[:, axis]
    return set_to_set(G, p, c == c.min(), c == c.max(), trials, seed)


def _event_fn(G: Graph, event: dict):
    kind = event.get("kind", "giant")
    if kind == "giant":
        target = _giant_target(G, float(event["alpha"]))
        return lambda f: f.max_size >= target
    if kind == "connect":
        x, y = int(event["x"]), int(event["y"])
        return lambda f: f.parent[x] == f.parent[y]
    raise ValueError(f"unknown event kind {kind!r}")


def theta_power_check(G: Graph, p: float, theta: float, event: dict, trials: int,
                      seed: int, z: float = 2.0) -> dict:
    """Check ``P_{p^θ}(E) ≥ P_p(E)^θ`` for an increasing event E.

    ``event`` is ``{"kind": "giant", "alpha": a}`` or
    ``{"kind": "connect", "x": u, "y": v}``. Passes unless the left side is
    below the right by more than z combined standard errors.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    fn = _event_fn(G, event)
    hi = McEstimate.from_counts(_run_trials(G, p ** theta, trials, seed, fn), trials, seed)
    lo = McEstimate.from_counts(_run_trials(G, p, trials, seed, fn), trials, seed)
    rhs = lo.estimate ** theta
    rhs_se = theta * lo.estimate ** (theta - 1) * lo.stderr if lo.estimate > 0 else 0.0
    se = math.hypot(hi.stderr, rhs_se)
    return {"lhs": hi.estimate, "rhs": rhs, "stderr": se,
            "pass": bool(hi.estimate >= rhs - z * se)}


def cluster_connect_check(G: Graph, p: float, u: int, alpha: float, trials: int,
                          seed: int) -> dict:
    """Empirical ``β = E|K_u|/|V|`` against ``P(|K_u| ≥ α|V|)``.

    The Markov bound gives ``P(|K_u| ≥ α|V|) ≥ (β-α)/(1-α)``; the transitive
    converse gives ``E|K_u| ≥ αq|V|`` with q the giant probability.
    """
    target = _giant_target(G, alpha)
    sizes = np.empty(trials)
    for t in range(trials):
        f = _forest(G, edge_uniforms(G.num_edges, seed, t) < p)
        sizes[t] = f.cluster_size(u)
    beta = sizes.mean() / G.n
    prob = float((sizes >= target).mean())
    se = math.sqrt(max(prob * (1 - prob), 1.0 / trials) / trials)
    markov = (beta - alpha) / (1 - alpha)
    return {"beta": float(beta), "prob": prob, "stderr": se, "markov_bound": markov,
            "markov_ok": bool(beta <= alpha or prob >= markov - 3 * se),
            "converse_ok": bool(beta + 3 * sizes.std(ddof=1) / math.sqrt(trials) / G.n
                                >= alpha * prob)}
