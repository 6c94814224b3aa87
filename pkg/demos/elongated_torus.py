"""Why thin tori need m of order log n: blocked cycles kill the giant cluster.

On (Z/n) x (Z/m) each cycle {x} x Z_m has all 3m incident edges closed with
probability (1-p)^{3m}; as soon as n(1-p)^{3m} is large, some two such cycles
cut the torus into pieces shorter than half of it. The giant needs m a few
times past that knee, since a thin strip is effectively one-dimensional.

Run: python3 demos/elongated_torus.py
"""

from percolab.experiments import ExperimentSpec, elongated_knee, run_experiment

n, p = 1000, 0.7
spec = ExperimentSpec.from_dict({
    "kind": "elongated-torus-phase", "seed": 1,
    "grid": {"m": [1, 2, 3, 4, 6, 8, 12, 16]},
    "params": {"n": n, "p": p, "trials": 100},
})
res = run_experiment(spec)
print(f"predicted knee m ~ {elongated_knee(n, p):.2f}")
for r in res["rows"]:
    print(f"m={r['m']:2d}  P(giant)={r['estimate']:.2f}  blocked={r['blocked_mean']:.2f}"
          f" (expected {r['blocked_expected']:.2f})")
print("checks:", res["checks"])
