"""Green function, free field and the random-environment connection bound.

Run: python3 demos/gff_bound.py
"""

import numpy as np

from percolab.groups import grid_graph
from percolab.potential import (conductance_forms, dirichlet_system, green_matrix, ring_boundary,
                                sample_gff, verify_gff_bound, witness_identity_check)

for L in (6, 8, 12):
    G, coords = grid_graph(L, L)
    B = ring_boundary(coords)
    centre = int(np.flatnonzero((coords == [L // 2 - 1] * 2).all(axis=1))[0])
    green = green_matrix(dirichlet_system(G, B))
    forms = conductance_forms(G, [centre], B)
    rep = verify_gff_bound(G, B, [centre], 200, 40, seed=L, green=green)
    print(f"{L}x{L}: C_eff={forms['flow']:.4f} (hitting {forms['hitting']:.4f}),"
          f" G_B(c,c)={green(centre, centre):.4f}, witness dev"
          f" {witness_identity_check(green, [centre]):.1e}")
    print(f"   bound {rep['bound']:.3f} <= estimate {rep['estimate']:.3f}"
          f" +- {rep['stderr_total']:.3f}  pass={rep['pass']}")

phi = sample_gff(green, seed=0).values
print("one field sample, centre row:", np.round(phi.reshape(L, L)[L // 2], 2))
