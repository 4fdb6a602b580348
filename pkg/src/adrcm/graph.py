"""Graph container: structure-of-arrays vertex store plus split adjacency.

Vertices are stored sorted by birth time; each vertex keeps separate id lists
for its older and younger neighbors, so degree statistics can stream over the
arrays without touching a general graph library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Space, Vertex, wrap_position
from .kernel import ModelParams, format_profile, parse_profile

__all__ = ["Graph", "rescale_graph", "export_text", "parse_text"]


@dataclass
class Graph:
    """An immutable-by-convention realization of the network at one horizon."""

    params: ModelParams
    t: float
    seed: int
    births: np.ndarray  # (n,), strictly increasing
    positions: np.ndarray  # (n, d)
    older: list[np.ndarray]  # per-vertex ids of older neighbors, sorted
    younger: list[np.ndarray]  # per-vertex ids of younger neighbors, sorted
    horizon: float = 0.0  # max birth time covered; equals t on growth graphs
    root_id: int | None = None

    def __post_init__(self) -> None:
        if self.horizon == 0.0:
            self.horizon = self.t

    @property
    def space(self) -> Space:
        return self.params.space

    @property
    def n_vertices(self) -> int:
        return len(self.births)

    @property
    def n_edges(self) -> int:
        return int(sum(len(a) for a in self.older))

    def vertex(self, vid: int) -> Vertex:
        return Vertex(position=self.positions[vid], birth_time=float(self.births[vid]), id=vid)

    def degree(self, vid: int) -> int:
        return len(self.older[vid]) + len(self.younger[vid])

    def neighbors(self, vid: int) -> np.ndarray:
        return np.concatenate([self.older[vid], self.younger[vid]])

    def edges(self):
        """Iterate edges once as (younger_id, older_id) pairs."""
        for j, olds in enumerate(self.older):
            for i in olds:
                yield j, int(i)

    def validate(self) -> None:
        """Check adjacency symmetry, age ordering, simplicity.  Test helper."""
        n = self.n_vertices
        assert np.all(np.diff(self.births) > 0), "births must be strictly increasing"
        for j in range(n):
            assert not np.any(self.older[j] == j), "self loop"
            assert len(set(self.older[j].tolist())) == len(self.older[j]), "multi-edge"
            for i in self.older[j]:
                assert self.births[i] < self.births[j], "older neighbor not older"
                assert j in self.younger[int(i)], "adjacency not symmetric"
        for i in range(n):
            for j in self.younger[i]:
                assert i in self.older[int(j)], "adjacency not symmetric"


def rescale_graph(g: Graph) -> Graph:
    """Map a unit-torus graph at horizon t to the volume-t torus with ages in (0,1].

    Positions scale by ``t**(1/d)``, birth times shrink by ``1/t`` and the edge
    set is carried over verbatim.
    """
    space = g.space
    if space.volume != 1.0:
        raise ValueError("rescaling is defined on the unit-volume torus")
    if g.n_vertices and g.births[-1] > g.t:
        raise ValueError("vertices born after the horizon cannot be rescaled")
    factor = g.t ** (1.0 / space.d)
    new_space = Space(d=space.d, volume=g.t)
    return replace(
        g,
        params=replace(g.params, space=new_space),
        births=g.births / g.t,
        positions=g.positions * factor,
        horizon=1.0,
    )


def palm_recenter(g: Graph, vertex_id: int) -> Graph:
    """Shift a chosen root to the origin (torus-wrapped), then rescale.

    Edges and degrees are untouched; only the coordinate frame moves.
    """
    if not 0 <= vertex_id < g.n_vertices:
        raise KeyError(f"unknown vertex id {vertex_id}")
    shifted = wrap_position(g.positions - g.positions[vertex_id], g.space)
    recentered = replace(g, positions=shifted, root_id=vertex_id)
    return rescale_graph(recentered)


def export_text(g: Graph) -> str:
    """Line-oriented text form: header, ``V id birth x..``, ``E younger older``.

    Floats are written in shortest round-trip form so parsing is bit-exact.
    """
    head = (
        f"# adrcm graph v1\n"
        f"d={g.space.d} volume={g.space.volume!r} beta={g.params.beta!r} "
        f"gamma={g.params.gamma!r} profile={format_profile(g.params.profile)} "
        f"t={g.t!r} seed={g.seed} horizon={g.horizon!r}\n"
    )
    lines = [head]
    for vid in range(g.n_vertices):
        coords = " ".join(repr(float(c)) for c in g.positions[vid])
        lines.append(f"V {vid} {float(g.births[vid])!r} {coords}\n")
    for j, olds in enumerate(g.older):
        for i in olds:
            lines.append(f"E {j} {int(i)}\n")
    return "".join(lines)


def parse_text(text: str) -> Graph:
    """Inverse of :func:`export_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# adrcm graph"):
        raise ValueError("not a graph export: missing header line")
    fields = dict(tok.split("=", 1) for tok in lines[1].split())
    d = int(fields["d"])
    space = Space(d=d, volume=float(fields["volume"]))
    params = ModelParams(
        beta=float(fields["beta"]),
        gamma=float(fields["gamma"]),
        profile=parse_profile(fields["profile"], d=d),
        space=space,
    )
    births: list[float] = []
    coords: list[list[float]] = []
    edge_pairs: list[tuple[int, int]] = []
    for ln in lines[2:]:
        parts = ln.split()
        if parts[0] == "V":
            vid = int(parts[1])
            if vid != len(births):
                raise ValueError("vertex ids must appear in birth order")
            births.append(float(parts[2]))
            coords.append([float(c) for c in parts[3 : 3 + d]])
        elif parts[0] == "E":
            edge_pairs.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"unknown record {parts[0]!r}")
    n = len(births)
    older: list[list[int]] = [[] for _ in range(n)]
    younger: list[list[int]] = [[] for _ in range(n)]
    for j, i in edge_pairs:
        older[j].append(i)
        younger[i].append(j)
    return Graph(
        params=params,
        t=float(fields["t"]),
        seed=int(fields["seed"]),
        births=np.asarray(births, dtype=float),
        positions=np.asarray(coords, dtype=float).reshape(n, d),
        older=[np.asarray(sorted(a), dtype=np.int64) for a in older],
        younger=[np.asarray(sorted(a), dtype=np.int64) for a in younger],
        horizon=float(fields["horizon"]),
    )
