"""Empirical network statistics: degrees, clustering, rescaled edge lengths.

Degree distributions follow the growth-normalization convention (mass divided
by the horizon, not the vertex count), with a switch to plain probabilities
for comparisons against limit laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

__all__ = [
    "Distribution",
    "outdegree_distribution",
    "indegree_distribution",
    "degree_counts",
    "clustering_global",
    "clustering_local",
    "clustering_average",
    "triangle_count",
    "wedge_count",
    "rescaled_edge_lengths",
    "edge_length_distribution",
    "edge_length_moment",
    "total_variation",
]


@dataclass
class Distribution:
    """Masses over integer support or real bins.

    ``masses`` may sum to less than one by design: the growth normalization
    divides by the horizon ``t``, so the total is (vertex count)/t.
    """

    masses: np.ndarray
    support: np.ndarray | None = None  # integer ks
    bin_edges: np.ndarray | None = None  # len(masses) + 1 edges
    normalizer: float = 1.0

    def __post_init__(self) -> None:
        if (self.support is None) == (self.bin_edges is None):
            raise ValueError("exactly one of support / bin_edges must be given")
        if np.any(self.masses < 0):
            raise ValueError("masses must be nonnegative")

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def probabilities(self) -> np.ndarray:
        """Masses renormalized to a probability vector."""
        tot = self.total
        return self.masses / tot if tot > 0 else self.masses

    def mass(self, k: int) -> float:
        if self.support is None:
            raise ValueError("mass(k) is for integer-support distributions")
        hits = np.nonzero(self.support == k)[0]
        return float(self.masses[hits[0]]) if len(hits) else 0.0


def _degree_distribution(counts: np.ndarray, t: float) -> Distribution:
    k_max = int(counts.max()) if len(counts) else 0
    masses = np.bincount(counts, minlength=k_max + 1).astype(float) / t
    return Distribution(masses=masses, support=np.arange(k_max + 1), normalizer=t)


def outdegree_distribution(g: Graph) -> Distribution:
    """Mass at k = (number of vertices with k older neighbors) / t."""
    counts = np.array([len(a) for a in g.older], dtype=np.int64)
    return _degree_distribution(counts, g.horizon)


def indegree_distribution(g: Graph) -> Distribution:
    """Mass at k = (number of vertices with k younger neighbors) / t."""
    counts = np.array([len(a) for a in g.younger], dtype=np.int64)
    return _degree_distribution(counts, g.horizon)


def degree_counts(g: Graph) -> np.ndarray:
    """Total degree per vertex."""
    return np.array([g.degree(v) for v in range(g.n_vertices)], dtype=np.int64)


def _adjacency_sets(g: Graph) -> list[np.ndarray]:
    return [np.sort(g.neighbors(v)) for v in range(g.n_vertices)]


def triangle_count(g: Graph) -> int:
    """Exact triangle count by forward intersection over degree-ranked edges."""
    n = g.n_vertices
    deg = np.array([g.degree(v) for v in range(n)], dtype=np.int64)
    # Rank by (degree, id); orient every edge from lower to higher rank.
    order = np.lexsort((np.arange(n), deg))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    forward: list[list[int]] = [[] for _ in range(n)]
    for j, i in g.edges():
        lo, hi = (j, i) if rank[j] < rank[i] else (i, j)
        forward[lo].append(hi)
    fwd = [np.sort(np.asarray(a, dtype=np.int64)) for a in forward]
    total = 0
    for v in range(n):
        fv = fwd[v]
        for w in fv:
            total += len(np.intersect1d(fv, fwd[w], assume_unique=True))
    return total


def wedge_count(g: Graph) -> int:
    deg = np.array([g.degree(v) for v in range(g.n_vertices)], dtype=np.int64)
    return int(np.sum(deg * (deg - 1) // 2))


def clustering_global(g: Graph) -> float:
    """Transitivity: three times the triangles over the wedges, zero if no wedge."""
    wedges = wedge_count(g)
    if wedges == 0:
        return 0.0
    return 3.0 * triangle_count(g) / wedges


def _local_triangles(g: Graph, vid: int, neighbor_sets: list[np.ndarray] | None = None) -> int:
    nbrs = np.sort(g.neighbors(vid))
    count = 0
    for w in nbrs:
        ws = neighbor_sets[int(w)] if neighbor_sets is not None else np.sort(g.neighbors(int(w)))
        count += len(np.intersect1d(nbrs, ws, assume_unique=True))
    return count // 2  # each triangle pair seen from both endpoints


def clustering_local(g: Graph, vertex_id: int) -> float:
    """Fraction of closed wedges at a vertex; undefined below degree two."""
    k = g.degree(vertex_id)
    if k < 2:
        raise ValueError(f"local clustering undefined for degree {k} vertex {vertex_id}")
    return _local_triangles(g, vertex_id) / (k * (k - 1) / 2)


def clustering_average(g: Graph) -> float:
    """Mean local clustering over vertices of degree at least two (0 if none)."""
    sets = _adjacency_sets(g)
    values = []
    for v in range(g.n_vertices):
        k = g.degree(v)
        if k < 2:
            continue
        values.append(_local_triangles(g, v, sets) / (k * (k - 1) / 2))
    return float(np.mean(values)) if values else 0.0


def rescaled_edge_lengths(g: Graph) -> np.ndarray:
    """Per-edge torus distance scaled by ``t**(1/d)``."""
    from .geometry import torus_distances

    if g.space.volume != 1.0:
        raise ValueError("rescaled edge lengths are defined on unit-torus growth graphs")
    factor = g.t ** (1.0 / g.space.d)
    chunks = []
    for j, olds in enumerate(g.older):
        if len(olds):
            chunks.append(torus_distances(g.positions[j], g.positions[olds], g.space))
    if not chunks:
        return np.empty(0)
    return factor * np.concatenate(chunks)


def edge_length_distribution(
    g: Graph, n_bins: int = 20, bin_edges: np.ndarray | None = None
) -> Distribution:
    """Histogram of rescaled edge lengths, normalized to a probability."""
    lengths = rescaled_edge_lengths(g)
    if len(lengths) == 0:
        raise ValueError("graph has no edges")
    if bin_edges is None:
        lo, hi = float(lengths.min()), float(lengths.max())
        if lo == hi:
            hi = lo * (1.0 + 1e-9) + 1e-12
        bin_edges = np.geomspace(max(lo, 1e-300), hi, n_bins + 1)
    counts, edges = np.histogram(lengths, bins=bin_edges)
    return Distribution(
        masses=counts / len(lengths), bin_edges=edges, normalizer=float(len(lengths))
    )


def edge_length_moment(g: Graph, a: float, b: float) -> float:
    """Mean over vertices of (sum of rescaled neighbor distances**a)**b, per edge.

    Computed with exact summation so an independent recomputation from the raw
    edge list reproduces it bit for bit.  Convergence as the horizon grows
    needs ``b < eta/a``; the value is still returned outside that range.
    """
    from .geometry import torus_distances
    from .oracle import eta as _eta

    if b < 0 or a <= 0:
        raise ValueError("need a > 0 and b >= 0")
    if b * a >= _eta(g.params):
        import warnings

        warnings.warn(
            f"moment (a={a}, b={b}) is outside the convergent range b < eta/a",
            stacklevel=2,
        )
    n_edges = g.n_edges
    if n_edges == 0:
        raise ValueError("graph has no edges")
    factor = g.t ** (1.0 / g.space.d)
    terms = []
    for v in range(g.n_vertices):
        nbrs = g.neighbors(v)
        if len(nbrs) == 0:
            inner = 0.0
        else:
            dist = factor * torus_distances(g.positions[v], g.positions[nbrs], g.space)
            inner = math.fsum(float(x) for x in dist**a)
        terms.append(inner**b)
    return math.fsum(terms) / n_edges


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance, padding the shorter vector with zeros."""
    n = max(len(p), len(q))
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: len(p)] = p
    qq[: len(q)] = q
    return 0.5 * float(np.sum(np.abs(pp - qq)))
