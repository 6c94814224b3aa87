"""Seeded experiment runner: a JSON spec in, CSV rows and a JSON summary out.

Spec schema (all keys except ``kind`` and ``seed`` optional)::

    {
      "kind": "giant" | "elongated-torus-phase" | "progression-corpus"
              | "gff-verify" | "sharp-threshold",
      "graph": "torus:n=64,m=64",        # descriptor, or a template with {L}
      "grid": {"p": [...], "alpha": [...], "m": [...], "L": [...], ...},
      "params": {"trials": 200, "q": 0.5, ...},   # scalars shared by rows
      "seed": 7,
      "output": "results.csv",           # summary goes to results.summary.json
      "budget": {"max_edges": 5000000, "max_trials": 100000, "row_seconds": 1800}
    }

Every row carries an ``ok`` status and, where the kind defines one, a
pass/fail column. Rows are computed in grid order; with
``PERCOLAB_WORKERS > 1`` they are computed in worker processes but still
written in grid order, and the output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from .couplings import blocked_cycle_count, blocked_cycle_expected
from .families import parse_descriptor
from .groups import elongated_torus
from .percolation import (McEstimate, clusters, edge_uniforms, giant_thresholds, mc_giant,
                          quantile_pc)
from .potential import dirichlet_system, green_matrix, ring_boundary, verify_gff_bound
from .progressions import CertificationError, extract_progression, random_corpus

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentSpec",
    "run_experiment",
    "sharp_threshold_scan",
    "elongated_knee",
    "KINDS",
    "rows_to_csv",
    "write_chart",
]

SCHEMA_VERSION = "percolab-results/1"
DEFAULT_BUDGET = {"max_edges": 5_000_000, "max_trials": 100_000, "row_seconds": 1800.0}


@dataclass
class ExperimentSpec:
    kind: str
    seed: int
    graph: str = ""
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: str | None = None
    budget: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValueError("an integer seed is required")
        for k, v in self.grid.items():
            if not isinstance(v, list) or not v:
                raise ValueError(f"grid entry {k!r} must be a nonempty list")
        unknown = set(self.budget) - set(DEFAULT_BUDGET)
        if unknown:
            raise ValueError(f"unknown budget keys {sorted(unknown)}")
        self.budget = {**DEFAULT_BUDGET, **self.budget}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {"kind", "seed", "graph", "grid", "params", "output", "budget"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown spec keys {sorted(extra)}")
        if "kind" not in data or "seed" not in data:
            raise ValueError("spec needs 'kind' and 'seed'")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def rows(self) -> list[dict]:
        """Cartesian product of the grid in key order given."""
        keys = list(self.grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.grid[k] for k in keys))]


def _param(spec: ExperimentSpec, row: dict, key: str, default=None):
    if key in row:
        return row[key]
    if key in spec.params:
        return spec.params[key]
    if default is None:
        raise ValueError(f"missing parameter {key!r}")
    return default


def _check_budget(spec: ExperimentSpec, edges: int, trials: int) -> str | None:
    if edges > spec.budget["max_edges"]:
        return f"budget:max_edges ({edges} > {spec.budget['max_edges']})"
    if trials > spec.budget["max_trials"]:
        return f"budget:max_trials ({trials} > {spec.budget['max_trials']})"
    return None


# --- row kernels -----------------------------------------------------------

def _row_giant(spec: ExperimentSpec, row: dict) -> dict:
    fam = parse_descriptor(spec.graph)
    p = float(_param(spec, row, "p"))
    alpha = float(_param(spec, row, "alpha", 0.5))
    trials = int(_param(spec, row, "trials", 200))
    bad = _check_budget(spec, fam.graph.num_edges, trials)
    if bad:
        return {"p": p, "alpha": alpha, "status": bad}
    est = mc_giant(fam.graph, p, alpha, trials, spec.seed)
    return {"p": p, "alpha": alpha, **est.as_row()}


def elongated_knee(n: int, p: float) -> float:
    """``m`` at which ``n (1-p)^{3m} = 1``: below it blocked cycles are typical."""
    return math.log(n) / (3 * math.log(1 / (1 - p)))


def _row_elongated(spec: ExperimentSpec, row: dict) -> dict:
    n = int(_param(spec, row, "n"))
    m = int(_param(spec, row, "m"))
    p = float(_param(spec, row, "p"))
    alpha = float(_param(spec, row, "alpha", 0.5))
    trials = int(_param(spec, row, "trials", 200))
    base = {"n": n, "m": m, "p": p, "alpha": alpha}
    bad = _check_budget(spec, 2 * n * m, trials)
    if bad:
        return {**base, "status": bad}
    G = elongated_torus(n, m)
    target = max(1, math.ceil(alpha * G.n - 1e-12))
    hits = 0
    counts = np.empty(trials)
    for t in range(trials):
        open_edges = edge_uniforms(G.num_edges, spec.seed, t) < p
        hits += clusters(G, open_edges).max_size >= target
        counts[t] = blocked_cycle_count(G, n, m, open_edges)
    est = McEstimate.from_counts(int(hits), trials, spec.seed)
    expected = blocked_cycle_expected(n, m, p)
    se = counts.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
    se_floor = max(se, math.sqrt(expected / trials))
    return {**base, **est.as_row(), "blocked_mean": float(counts.mean()),
            "blocked_expected": expected, "blocked_stderr": float(se),
            "blocked_pass": bool(abs(counts.mean() - expected) <= 3 * se_floor)}


def _row_progression(spec: ExperimentSpec, row: dict) -> dict:
    # one row per corpus instance; the instance index is the grid coordinate
    i = int(row["instance"])
    inst = _corpus(spec)[i]
    g = inst["group"]
    out = {"instance": i, "moduli": "x".join(map(str, g.moduli)), "order": g.order,
           "k": len(inst["generators"]), "r": inst["r"],
           "q_subgroup": int(inst["Q"].sum())}
    try:
        res = extract_progression(g, inst["generators"], inst["Q"], inst["r"])
        out.update({"lengths": " ".join(map(str, res.lengths)), "volume": res.volume,
                    "certified": True})
    except CertificationError as exc:
        out.update({"lengths": "", "volume": 0, "certified": False, "status": f"error:{exc}"})
    return out


_CORPUS_CACHE: dict = {}


def _corpus(spec: ExperimentSpec) -> list:
    key = (spec.seed, int(spec.params.get("count", 200)))
    if key not in _CORPUS_CACHE:
        _CORPUS_CACHE.clear()
        _CORPUS_CACHE[key] = random_corpus(*key)
    return _CORPUS_CACHE[key]


def _row_gff(spec: ExperimentSpec, row: dict) -> dict:
    fam = parse_descriptor(spec.graph)
    G = fam.graph
    if fam.coords is None:
        raise ValueError("gff-verify needs a graph with coordinates (box or grid)")
    B = ring_boundary(fam.coords)
    A = spec.params.get("a")
    if A is None:
        centre = np.round(fam.coords.mean(axis=0) - 0.25).astype(int)
        A = [int(np.flatnonzero(np.all(fam.coords == centre, axis=1))[0])]
    outer = int(_param(spec, row, "outer", 200))
    inner = int(_param(spec, row, "inner", 50))
    bad = _check_budget(spec, G.num_edges, outer * inner)
    if bad:
        return {"outer": outer, "inner": inner, "status": bad}
    green = green_matrix(dirichlet_system(G, B))
    rep = verify_gff_bound(G, B, A, outer, inner, spec.seed, green=green)
    return {"bound": rep["bound"], "estimate": rep["estimate"],
            "stderr_outer": rep["stderr_outer"], "stderr_inner": rep["stderr_inner"],
            "stderr_total": rep["stderr_total"], "c_eff": rep["c_eff"],
            "outer": outer, "inner": inner, "seed": spec.seed, "pass": rep["pass"]}


def sharp_threshold_scan(family: Callable[[int], object] | str, sizes: Iterable[int],
                         alpha: float, eps: float, trials: int, seed: int,
                         level: float = 0.95, resamples: int = 400) -> list[dict]:
    """Per-size ``p_c(α, ε)``, ``p_c(α, 1-ε)`` and their gap.

    ``family`` maps a size to a graph, or is a descriptor template such as
    ``"torus:{L},{L}"``. Each size uses one set of Newman-Ziff thresholds, so
    both critical values come from the same trials: an order-statistic CI
    is given for each, and a seeded bootstrap for the gap. ``resolved`` is
    False when the two CIs overlap; ``wide_ci`` flags rows whose gap CI is
    wider than half the gap itself (or unresolved), typical of tiny graphs
    or few trials.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    out = []
    for L in sizes:
        if isinstance(family, str):
            G = parse_descriptor(family.format(L=L)).graph
        else:
            G = family(L)
        th = giant_thresholds(G, alpha, trials, seed)
        lo, lo_a, lo_b = quantile_pc(th, eps, level)
        hi, hi_a, hi_b = quantile_pc(th, 1 - eps, level)

        def gap(x, axis=-1):
            return (np.quantile(x, 1 - eps, axis=axis, method="inverted_cdf")
                    - np.quantile(x, eps, axis=axis, method="inverted_cdf"))

        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 6, int(L)])))
        boot = stats.bootstrap((th,), gap, n_resamples=resamples, confidence_level=level,
                               method="percentile", random_state=rng)
        out.append({"L": int(L), "vertices": G.n, "trials": trials, "seed": seed,
                    "pc_eps": lo, "pc_eps_lo": lo_a, "pc_eps_hi": lo_b,
                    "pc_1meps": hi, "pc_1meps_lo": hi_a, "pc_1meps_hi": hi_b,
                    "gap": hi - lo, "gap_stderr": float(boot.standard_error),
                    "gap_lo": float(boot.confidence_interval.low),
                    "gap_hi": float(boot.confidence_interval.high),
                    "resolved": bool(hi_a > lo_b),
                    "wide_ci": bool(hi_a <= lo_b or boot.confidence_interval.high
                                    - boot.confidence_interval.low > 0.5 * (hi - lo))})
    return out


def _row_sharp(spec: ExperimentSpec, row: dict) -> dict:
    L = int(_param(spec, row, "L"))
    trials = int(_param(spec, row, "trials", 1000))
    G = parse_descriptor(spec.graph.format(L=L)).graph
    bad = _check_budget(spec, G.num_edges, trials)
    if bad:
        return {"L": L, "status": bad}
    return sharp_threshold_scan(lambda _: G, [L], float(_param(spec, row, "alpha", 0.5)),
                                float(_param(spec, row, "eps", 0.25)), trials, spec.seed)[0]


KINDS: dict[str, Callable[[ExperimentSpec, dict], dict]] = {
    "giant": _row_giant,
    "elongated-torus-phase": _row_elongated,
    "progression-corpus": _row_progression,
    "gff-verify": _row_gff,
    "sharp-threshold": _row_sharp,
}


def _run_row(args) -> dict:
    spec, row = args
    t0 = time.perf_counter()
    try:
        out = KINDS[spec.kind](spec, row)
    except Exception as exc:  # reported per row; the run continues
        out = {**row, "status": f"error:{type(exc).__name__}: {exc}"}
    out.setdefault("status", "ok")
    out["runtime"] = round(time.perf_counter() - t0, 3)
    if out["status"] == "ok" and out["runtime"] > spec.budget["row_seconds"]:
        out["status"] = f"budget:row_seconds ({out['runtime']}s)"
    return out


def _monotone_checks(spec: ExperimentSpec, rows: list[dict], z: float = 2.0) -> dict:
    """CI-aware monotonicity columns, filled into the rows in place."""
    checks = {}

    def chain(key_x, key_y, key_se, increasing, name, group_keys=()):
        ok_all = True
        groups: dict = {}
        for r in rows:
            if r.get("status") == "ok" and key_y in r:
                groups.setdefault(tuple(r.get(k) for k in group_keys), []).append(r)
        for rs in groups.values():
            rs.sort(key=lambda r: r[key_x])
            prev = None
            for r in rs:
                ok = True
                if prev is not None:
                    tol = z * math.hypot(prev[key_se], r[key_se])
                    diff = r[key_y] - prev[key_y]
                    ok = diff >= -tol if increasing else diff <= tol
                r[name] = ok
                ok_all &= ok
                prev = r
        checks[name] = ok_all

    if spec.kind == "giant":
        chain("p", "estimate", "stderr", True, "monotone_in_p", ("alpha",))
    elif spec.kind == "elongated-torus-phase":
        chain("m", "estimate", "stderr", True, "monotone_in_m", ("n", "p", "alpha"))
    elif spec.kind == "sharp-threshold":
        chain("L", "gap", "gap_stderr", False, "gap_nonincreasing")
    return checks


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    # runtime last so that diffs ignoring it are easy
    if "runtime" in cols:
        cols.remove("runtime")
        cols.append("runtime")
    return cols


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(round(v, 12))
    return v


def rows_to_csv(kind: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA_VERSION} kind={kind}\n")
    cols = _columns(rows)
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in cols})
    return buf.getvalue()


def _grid_for(spec: ExperimentSpec) -> list[dict]:
    if spec.kind == "progression-corpus":
        return [{"instance": i} for i in range(int(spec.params.get("count", 200)))]
    rows = spec.rows()
    return rows if rows else [{}]


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> dict:
    """Run every grid row and return ``{"rows", "checks", "all_pass", "summary"}``.

    When ``spec.output`` is set, rows are appended to that CSV as they
    finish (in grid order) and the summary is written beside it.
    """
    if workers is None:
        workers = int(os.environ.get("PERCOLAB_WORKERS", "1") or 1)
    grid = _grid_for(spec)
    jobs = [(spec, r) for r in grid]
    fh = open(spec.output, "w", newline="") if spec.output else None
    rows: list[dict] = []
    try:
        pool = ProcessPoolExecutor(workers) if workers > 1 and len(jobs) > 1 else None
        results = pool.map(_run_row, jobs) if pool else map(_run_row, jobs)
        for r in results:
            rows.append(r)
            if fh:
                # the header is the union of columns seen so far, so rewrite
                fh.seek(0)
                fh.truncate()
                fh.write(rows_to_csv(spec.kind, rows))
                fh.flush()
        if pool:
            pool.shutdown()
        checks = _monotone_checks(spec, rows)
        if fh:
            fh.seek(0)
            fh.truncate()
            fh.write(rows_to_csv(spec.kind, rows))
    finally:
        if fh:
            fh.close()
    for col in ("pass", "blocked_pass", "certified"):
        vals = [r[col] for r in rows if col in r]
        if vals:
            checks[col] = bool(all(vals))
    checks["rows_completed"] = all(r["status"] == "ok" for r in rows)
    summary = {"schema": SCHEMA_VERSION, "spec": asdict(spec), "rows": len(rows),
               "checks": checks, "all_pass": all(checks.values())}
    if spec.kind == "elongated-torus-phase":
        n = int(_param(spec, {}, "n", spec.grid.get("n", [0])[0]))
        p = float(_param(spec, {}, "p", spec.grid.get("p", [0.5])[0]))
        summary["predicted_knee_m"] = elongated_knee(n, p) if n > 1 else None
    if spec.output:
        base = spec.output[:-4] if spec.output.endswith(".csv") else spec.output
        with open(base + ".summary.json", "w") as sfh:
            json.dump(summary, sfh, indent=2, default=_json_default)
    return {"rows": rows, "checks": checks, "all_pass": summary["all_pass"], "summary": summary}


def write_chart(rows: list[dict], x: str, y: str, path: str, err: str | None = None) -> None:
    """Static PNG/SVG of ``y`` against ``x`` (needs matplotlib)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts = sorted((r[x], r[y], r.get(err, 0.0) if err else 0.0) for r in rows
                 if r.get("status") == "ok" and y in r)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if pts:
        xs, ys, es = zip(*pts)
        ax.errorbar(xs, ys, yerr=[2 * e for e in es], marker="o", capsize=3)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")
