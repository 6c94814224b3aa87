"""``perc`` command line front end.

Every subcommand prints CSV or JSON to stdout (or ``--out``) and exits 0 iff
its embedded checks pass.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import couplings, isoperimetry, percolation, potential, progressions
from .experiments import ExperimentSpec, rows_to_csv, run_experiment, write_chart
from .families import parse_descriptor, write_graph
from .graph import as_mask
from .groups import AbelianGroup


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict], kind: str) -> str:
    return rows_to_csv(kind, rows)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o).__name__)
    return json.dumps(obj, indent=2, default=default) + "\n"


def _vertex_set(spec: str, fam) -> np.ndarray:
    """``set:<file>`` (JSON list of vertices), ``ring`` or ``center``."""
    G = fam.graph
    if spec == "ring":
        if fam.coords is None:
            raise SystemExit("'ring' needs a graph with coordinates")
        return potential.ring_boundary(fam.coords)
    if spec == "center":
        if fam.coords is None:
            raise SystemExit("'center' needs a graph with coordinates")
        c = np.round(fam.coords.mean(axis=0) - 0.25).astype(int)
        return np.all(fam.coords == c, axis=1)
    if spec.startswith("set:"):
        with open(spec[4:]) as fh:
            return as_mask(G, json.load(fh))
    raise SystemExit(f"bad vertex set {spec!r}")


def cmd_graph(a) -> int:
    fam = parse_descriptor(a.graph)
    if a.out:
        write_graph(fam, a.out, a.coords)
    else:
        sys.stdout.write(fam.graph.to_json() + "\n")
    return 0


def cmd_simulate(a) -> int:
    G = parse_descriptor(a.graph).graph
    rows = []
    for p in a.p:
        if a.event == "giant":
            est = percolation.mc_giant(G, p, a.alpha, a.trials, a.seed)
        else:
            est = percolation.two_point(G, p, a.x, a.y, a.trials, a.seed)
        rows.append({"p": p, **est.as_row()})
    _emit(_csv(rows, "simulate"), a.out)
    return 0


def cmd_pc(a) -> int:
    G = parse_descriptor(a.graph).graph
    est = percolation.estimate_pc(G, a.alpha, a.q, a.tol, a.trials, a.seed, a.max_trials)
    out = {"p": est.p, "lo": est.lo, "hi": est.hi, "resolved": est.resolved,
           "trials_needed": est.trials_needed,
           "lo_estimate": est.lo_estimate.as_row() if est.lo_estimate else None,
           "hi_estimate": est.hi_estimate.as_row() if est.hi_estimate else None,
           "probes": [dict(zip(("p", "estimate", "stderr", "trials"), pr)) for pr in est.probes]}
    _emit(_json(out), a.out)
    return 0 if est.resolved else 1


def _quotient_map(fam, mods: list[int]) -> np.ndarray:
    if fam.coords is None or fam.group is None or not isinstance(fam.group, AbelianGroup):
        raise SystemExit("--quotient needs an abelian/torus descriptor")
    if len(mods) != fam.coords.shape[1] or any(n % q for n, q in zip(fam.group.moduli, mods)):
        raise SystemExit("quotient moduli must divide the group moduli coordinatewise")
    return np.ravel_multi_index(tuple((fam.coords % np.asarray(mods)).T), mods)


def _scale_map(fam, target, k: int) -> np.ndarray:
    if fam.coords is None or target.coords is None or target.group is None:
        raise SystemExit("--phi scale:K needs coordinate-bearing source and torus target")
    img = (fam.coords * k) % np.asarray(target.group.moduli)
    return np.atleast_1d(target.group.index(img))


def cmd_couple(a) -> int:
    fam = parse_descriptor(a.graph)
    G = fam.graph
    out: dict = {"kind": a.kind, "samples": a.samples, "seed": a.seed}
    if a.kind == "union":
        bad = 0
        opened = 0
        for t in range(a.samples):
            w1, w2 = couplings.union_coupling(G, a.p, a.p2, a.seed, t)
            bad += bool((w1.open_edges & ~w2.open_edges).any())
            opened += int(w2.open_edges.sum())
        out.update(violations=bad, union_open_rate=opened / max(a.samples * G.num_edges, 1),
                   union_p=1 - (1 - a.p) * (1 - a.p2))
    elif a.kind == "quotient":
        orbit = _quotient_map(fam, [int(x) for x in a.quotient.split(",")])
        bad = 0
        for t in range(a.samples):
            bad += not couplings.quotient_coupling(G, orbit, a.p, a.seed, t).containment_ok()
        out.update(violations=bad)
    else:
        target = parse_descriptor(a.target)
        if not a.phi.startswith("scale:"):
            raise SystemExit("--phi must be scale:K")
        phi = _scale_map(fam, target, int(a.phi[6:]))
        pairs = couplings.geodesic_edge_sets(G, target.graph, phi)
        bad = 0
        r = None
        for t in range(a.samples):
            r = couplings.rough_embedding_coupling(G, target.graph, phi, a.p, a.seed, t, pairs)
            bad += not r.containment_ok()
        out.update(violations=bad, overlap=r.overlap if r else 0)
    _emit(_json(out), a.out)
    return 0 if out["violations"] == 0 else 1


def _parse_tuples(text: str) -> list[tuple[int, ...]]:
    found = re.findall(r"\(([^)]*)\)", text)
    if not found:
        return [(int(t),) for t in text.split(",")]
    return [tuple(int(x) for x in f.split(",")) for f in found]


def cmd_progression(a) -> int:
    g = AbelianGroup([int(m) for m in a.moduli.split(",")])
    gens = _parse_tuples(a.gens)
    Q = None
    if a.q_subgroup:
        q = int(g.index(_parse_tuples(a.q_subgroup)[0]))
        Q = np.zeros(g.order, dtype=bool)
        Q[np.atleast_1d(g.scale(np.arange(g.order), q))] = True
    try:
        res = progressions.extract_progression(g, gens, Q, a.r)
        payload = res.to_dict()
        payload["certified"] = res.certified
        code = 0
    except (progressions.CertificationError, ValueError) as exc:
        payload = {"error": str(exc), "certified": False}
        code = 1
    _emit(_json(payload), a.out)
    return code


def cmd_gff_verify(a) -> int:
    fam = parse_descriptor(a.graph)
    B = _vertex_set(a.boundary, fam)
    A = _vertex_set(a.a, fam)
    rep = potential.verify_gff_bound(fam.graph, B, A, a.outer, a.inner, a.seed)
    row = {k: rep[k] for k in ("bound", "estimate", "stderr_outer", "stderr_inner",
                               "stderr_total", "c_eff", "pass")}
    _emit(_csv([row], "gff-verify"), a.out)
    return 0 if rep["pass"] else 1


def cmd_iso(a) -> int:
    G = parse_descriptor(a.graph).graph
    if a.mode == "exhaustive":
        prof = isoperimetry.exhaustive_iso_profile(G, a.limit, a.connected_only)
        rows = [{"s": s, "min_boundary": int(b),
                 "witness": " ".join(map(str, np.flatnonzero(prof.witnesses[s])))}
                for s, b in enumerate(prof.min_boundary) if s > 0]
    else:
        w = isoperimetry.local_search_iso(G, a.d, seed=a.seed)
        rows = [{"s": w.size, "min_boundary": w.boundary, "ratio": w.ratio,
                 "witness": " ".join(map(str, np.flatnonzero(w.members)))}]
    _emit(_csv(rows, f"iso-{a.mode}"), a.out)
    return 0


def cmd_run(a) -> int:
    spec = ExperimentSpec.from_json(a.spec)
    if a.out:
        spec.output = a.out
    res = run_experiment(spec)
    if not spec.output:
        sys.stdout.write(rows_to_csv(spec.kind, res["rows"]))
    if a.chart:
        write_chart(res["rows"], a.chart_x, a.chart_y, a.chart, a.chart_err)
    sys.stderr.write(_json(res["summary"]["checks"]))
    return 0 if res["all_pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="perc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, graph=True):
        if graph:
            p.add_argument("--graph", required=True, help="graph descriptor, e.g. torus:n=64,m=64")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")

    p = sub.add_parser("graph", help="emit a graph in JSON format")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")
    p.add_argument("--coords", help="path for the coordinate sidecar")
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("simulate", help="Monte Carlo giant / two-point estimates")
    common(p)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--event", choices=["giant", "two-point"], default="giant")
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--y", type=int, default=0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("pc", help="stochastic bisection for p_c(G, alpha, q)")
    common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--max-trials", type=int, default=3200)
    p.set_defaults(fn=cmd_pc)

    p = sub.add_parser("couple", help="check coupling containments sample by sample")
    common(p)
    p.add_argument("--kind", choices=["union", "quotient", "embed"], required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--p2", type=float, default=0.5, help="second probability (union)")
    p.add_argument("--quotient", help="moduli of the quotient torus, e.g. 3 or 3,3")
    p.add_argument("--target", help="target descriptor (embed)")
    p.add_argument("--phi", default="scale:1", help="vertex map (embed), scale:K")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(fn=cmd_couple)

    p = sub.add_parser("progression", help="extract a certified proper progression")
    p.add_argument("--moduli", required=True, help="e.g. 12,5")
    p.add_argument("--gens", required=True, help="e.g. (1,0),(0,1)")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--q-subgroup", help="generator of a cyclic subgroup Q, e.g. (6,0)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_progression)

    p = sub.add_parser("gff-verify", help="nested Monte Carlo check of the GFF bound")
    common(p)
    p.add_argument("--boundary", default="ring", help="ring or set:<file>")
    p.add_argument("--a", default="center", help="center or set:<file>")
    p.add_argument("--outer", type=int, default=200)
    p.add_argument("--inner", type=int, default=50)
    p.set_defaults(fn=cmd_gff_verify)

    p = sub.add_parser("iso", help="isoperimetric profile")
    common(p)
    p.add_argument("--mode", choices=["exhaustive", "search"], default="exhaustive")
    p.add_argument("--d", type=float, default=2.0)
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--connected-only", action="store_true")
    p.set_defaults(fn=cmd_iso)

    p = sub.add_parser("run", help="run an experiment spec (JSON)")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="CSV path (overrides the spec)")
    p.add_argument("--chart", help="also write a static chart (png/svg)")
    p.add_argument("--chart-x", default="p")
    p.add_argument("--chart-y", default="estimate")
    p.add_argument("--chart-err", default="stderr")
    p.set_defaults(fn=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as exc:
        sys.stderr.write(f"perc: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
