"""Shared fixtures and independent brute-force oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from adrcm.geometry import Space, torus_distance
from adrcm.graph import Graph
from adrcm.kernel import IndicatorProfile, ModelParams


def make_params(beta=1.0, gamma=0.5, a=0.5, d=1, profile=None) -> ModelParams:
    prof = profile if profile is not None else IndicatorProfile(a=a, d=d)
    return ModelParams(beta=beta, gamma=gamma, profile=prof, space=Space(d))


def graph_from_edges(n: int, edges: list[tuple[int, int]], t: float = 1.0) -> Graph:
    """Tiny hand-built graph: vertex i born at (i+1)/(n+1)*t, positions spread."""
    births = (np.arange(n) + 1.0) / (n + 1.0) * t
    positions = ((np.arange(n) + 0.5) / n - 0.5).reshape(n, 1) * 0.9
    older = [[] for _ in range(n)]
    younger = [[] for _ in range(n)]
    for a, b in edges:
        j, i = (a, b) if a > b else (b, a)  # j younger (larger birth index)
        older[j].append(i)
        younger[i].append(j)
    return Graph(
        params=make_params(),
        t=t,
        seed=0,
        births=births,
        positions=positions,
        older=[np.asarray(sorted(x), dtype=np.int64) for x in older],
        younger=[np.asarray(sorted(x), dtype=np.int64) for x in younger],
    )


# ---------------------------------------------------------------------------
# brute-force oracles (kept deliberately naive and separate from the library)


def brute_triangles_triple_loop(g: Graph) -> int:
    """Cubic enumeration over all vertex triples."""
    n = g.n_vertices
    adj = [set(g.neighbors(v).tolist()) for v in range(n)]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if j not in adj[i]:
                continue
            for k in range(j + 1, n):
                if k in adj[i] and k in adj[j]:
                    count += 1
    return count


def brute_triangles_pairs(g: Graph) -> int:
    """Pair enumeration around each vertex; each triangle counted three times."""
    adj = [set(g.neighbors(v).tolist()) for v in range(g.n_vertices)]
    total = 0
    for v in range(g.n_vertices):
        nbrs = sorted(adj[v])
        for ai in range(len(nbrs)):
            for bi in range(ai + 1, len(nbrs)):
                if nbrs[bi] in adj[nbrs[ai]]:
                    total += 1
    return total // 3


def brute_local_clustering(g: Graph, v: int) -> float:
    adj = [set(g.neighbors(u).tolist()) for u in range(g.n_vertices)]
    nbrs = sorted(adj[v])
    k = len(nbrs)
    closed = sum(
        1
        for ai in range(k)
        for bi in range(ai + 1, k)
        if nbrs[bi] in adj[nbrs[ai]]
    )
    return closed / (k * (k - 1) / 2)


def brute_average_clustering(g: Graph) -> float:
    vals = [
        brute_local_clustering(g, v) for v in range(g.n_vertices) if g.degree(v) >= 2
    ]
    return float(np.mean(vals)) if vals else 0.0


def brute_global_clustering(g: Graph) -> float:
    deg = [g.degree(v) for v in range(g.n_vertices)]
    wedges = sum(k * (k - 1) // 2 for k in deg)
    if wedges == 0:
        return 0.0
    return 3.0 * brute_triangles_pairs(g) / wedges


def brute_edge_length_moment(g: Graph, a: float, b: float) -> float:
    """Recompute the moment from the raw edge list only."""
    factor = g.t ** (1.0 / g.space.d)
    per_vertex: dict[int, list[float]] = {v: [] for v in range(g.n_vertices)}
    for j, i in g.edges():
        length = factor * torus_distance(g.positions[j], g.positions[i], g.space)
        per_vertex[j].append(length)
        per_vertex[i].append(length)
    terms = [math.fsum(x**a for x in per_vertex[v]) ** b for v in range(g.n_vertices)]
    return math.fsum(terms) / g.n_edges


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
