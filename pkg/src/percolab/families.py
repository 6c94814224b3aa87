"""Text descriptors for graph families.

    torus:n=100,m=5            (Z/n) x (Z/m)
    torus:16,16,16             any number of cyclic factors
    box:3,3,40                 B(3,3,40), the box with those radii in Z^3
    grid:8,8                   {0..7} x {0..7}
    abelian:mods=12,5;gens=(1,0),(0,1)
    heisenberg:n=4
    cycle:n=10   path:n=10   complete:n=5   hypercube:d=4
    file:graph.json            the JSON graph format, optional "coords"
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .graph import Graph, build_graph
from .groups import (AbelianGroup, FiniteGroup, HeisenbergGroup, box_graph, cayley_graph,
                     grid_graph)

__all__ = ["Family", "parse_descriptor", "write_graph"]


@dataclass(frozen=True)
class Family:
    descriptor: str
    graph: Graph
    coords: np.ndarray | None = None
    group: FiniteGroup | None = None

    def coordinate_map(self) -> dict:
        if self.coords is None:
            return {}
        return {str(v): [int(c) for c in row] for v, row in enumerate(self.coords)}


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"expected integers, got {text!r}") from None


def _kv(text: str) -> dict[str, str]:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _torus(mods: list[int], desc: str) -> Family:
    if not mods or any(m < 1 for m in mods):
        raise ValueError("torus moduli must be positive")
    g = AbelianGroup(mods)
    gens = np.eye(len(mods), dtype=np.int64)
    G = cayley_graph(g, [tuple(r) for r in gens])
    return Family(desc, G, g.coords(np.arange(g.order)), g)


def parse_descriptor(desc: str) -> Family:
    kind, _, rest = desc.strip().partition(":")
    kind = kind.lower()
    if kind == "torus":
        if "=" in rest:
            kv = _kv(rest)
            mods = [int(kv[k]) for k in ("n", "m", "l") if k in kv]
        else:
            mods = _ints(rest)
        return _torus(mods, desc)
    if kind == "box":
        G, coords = box_graph(*_ints(rest))
        return Family(desc, G, coords)
    if kind == "grid":
        G, coords = grid_graph(*_ints(rest))
        return Family(desc, G, coords)
    if kind == "abelian":
        m = re.fullmatch(r"\s*mods=([\d,\s]+);\s*gens=(.*)", rest)
        if not m:
            raise ValueError(f"bad abelian descriptor {desc!r}")
        g = AbelianGroup(_ints(m.group(1)))
        gens = [tuple(_ints(t)) for t in re.findall(r"\(([^)]*)\)", m.group(2))]
        if not gens or any(len(t) != g.rank for t in gens):
            raise ValueError("generators must be tuples matching the number of moduli")
        G = cayley_graph(g, gens)
        return Family(desc, G, g.coords(np.arange(g.order)), g)
    if kind == "heisenberg":
        n = int(_kv(rest)["n"])
        h = HeisenbergGroup(n)
        G = cayley_graph(h, h.standard_generators())
        idx = np.arange(h.order)
        coords = np.stack([idx // (n * n), (idx // n) % n, idx % n], axis=1)
        return Family(desc, G, coords, h)
    if kind in ("cycle", "path", "complete"):
        n = int(_kv(rest)["n"])
        if n < 1:
            raise ValueError("n must be positive")
        if kind == "cycle":
            edges = [(i, (i + 1) % n) for i in range(n)]
        elif kind == "path":
            edges = [(i, i + 1) for i in range(n - 1)]
        else:
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        return Family(desc, build_graph(n, edges))
    if kind == "hypercube":
        return _torus([2] * int(_kv(rest)["d"]), desc)
    if kind == "file":
        with open(rest) as fh:
            data = json.load(fh)
        coords = np.asarray(data["coords"]) if "coords" in data else None
        return Family(desc, Graph.from_dict(data), coords)
    raise ValueError(f"unknown graph family {kind!r}")


def write_graph(family: Family, path: str, coords_path: str | None = None) -> None:
    """Write the JSON graph, and the coordinate map next to it if known."""
    with open(path, "w") as fh:
        json.dump(family.graph.to_dict(), fh)
    if family.coords is not None:
        if coords_path is None:
            coords_path = re.sub(r"(\.json)?$", ".coords.json", path, count=1)
        with open(coords_path, "w") as fh:
            json.dump(family.coordinate_map(), fh)
