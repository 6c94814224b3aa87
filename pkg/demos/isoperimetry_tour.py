"""Growth, scale detection and isoperimetric minimisers on small graphs.

Run: python3 demos/isoperimetry_tour.py
"""

from percolab.families import parse_descriptor
from percolab.isoperimetry import (exhaustive_iso_profile, growth_profile, local_search_iso,
                                   scale_detect)

for desc in ("torus:100,4", "torus:30,30", "heisenberg:n=5"):
    G = parse_descriptor(desc).graph
    prof = growth_profile(G, 0)
    print(f"{desc:16s} |B(o,n)| = {prof.sizes[:8].tolist()}...  "
          f"scale(d=2, c=1/2) = {scale_detect(prof, 2, 0.5)}")

G = parse_descriptor("grid:4,4").graph
exact = exhaustive_iso_profile(G)
print("4x4 grid, min edge boundary by size:", exact.min_boundary.tolist())
w = local_search_iso(G, 2.0, seed=0)
print(f"local search ratio {w.ratio:.4f}, exact {exact.best(2.0).ratio:.4f}")

big = parse_descriptor("grid:30,30").graph
w = local_search_iso(big, 2.0, seed=1)
print(f"30x30 grid: |A|={w.size}, |dA|={w.boundary}, ratio {w.ratio:.4f}")
