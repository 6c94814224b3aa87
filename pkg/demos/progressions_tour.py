"""Extract a certified proper progression from a ball in a finite Abelian group.

Run: python3 demos/progressions_tour.py
"""

import numpy as np

from percolab.groups import AbelianGroup
from percolab.progressions import (brute_force_max_proper, extract_progression, hat,
                                   progression_elements, sumset_power)

g = AbelianGroup([60, 7])
gens = [(1, 0), (0, 1)]
for r in (2, 5, 12, 40):
    res = extract_progression(g, gens, r=r)
    ball = sumset_power(g, hat(g, gens), r)
    P = progression_elements(res.progression)
    print(f"r={r:3d}  |rA|={int(ball.sum()):4d}  L={res.lengths}  |P|={int(P.sum()):4d}"
          f"  certified={res.certified}")

# the extractor makes no optimality claim; compare with exhaustive search
best = brute_force_max_proper(g, gens, r=12)
print("largest proper lengths at r=12 by exhaustive search:", best)

# a subgroup Q: work modulo the order-6 subgroup generated by (10, 0).
# Here a short relation mod Q shows up early and the recursion's constants
# leave nothing at depth 1, so the certified answer is the trivial one.
Q = np.zeros(g.order, dtype=bool)
Q[np.atleast_1d(g.scale(np.arange(6), g.index((10, 0))))] = True
res = extract_progression(g, gens, Q, r=40)
print("modulo <(10,0)>: L =", res.lengths, "certified:", res.certified)
for step in res.trace:
    print("  ", step)
