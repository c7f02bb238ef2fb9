"""Backbone extraction: iterated edge-disjoint minimum spanning forests with
a dissimilarity score that flags when further iterations add redundancy."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from isonymics.isonymy import DistanceMatrix

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


@dataclass
class SpanningForest:
    """Acyclic edge set over a fixed node range 0..n_nodes-1.

    Isolated nodes count as their own components, so the forest always
    satisfies ``len(edges) == n_nodes - n_components``.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    @property
    def covers(self) -> range:
        return range(self.n_nodes)

    @property
    def n_components(self) -> int:
        return self.n_nodes - len(self.edges)

    @property
    def is_spanning_tree(self) -> bool:
        return len(self.edges) == self.n_nodes - 1

    def edge_pairs(self) -> set[tuple[int, int]]:
        return {(u, v) for u, v, _ in self.edges}

    def to_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_weighted_edges_from(self.edges)
        return g


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _sorted_pairs(matrix: DistanceMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All unordered pairs sorted by (weight, smaller id, larger id)."""
    n = matrix.n
    iu, ju = np.triu_indices(n, k=1)
    w = matrix.values[iu, ju]
    order = np.lexsort((ju, iu, w))
    return iu[order], ju[order], w[order]


def spanning_forest(
    matrix: DistanceMatrix,
    excluded: Iterable[tuple[int, int]] = (),
) -> SpanningForest:
    """Minimum-weight spanning forest of the complete graph on the matrix
    cells, ignoring ``excluded`` pairs.

    Kruskal with a deterministic tie-break: edges are taken in
    (weight, smaller id, larger id) order, so equal-weight inputs always
    produce the same forest. Excluding everything yields an empty forest.
    """
    banned = {(min(a, b), max(a, b)) for a, b in excluded}
    iu, ju, w = _sorted_pairs(matrix)
    uf = _UnionFind(matrix.n)
    edges: list[tuple[int, int, float]] = []
    for i, j, weight in zip(iu.tolist(), ju.tolist(), w.tolist()):
        if (i, j) in banned:
            continue
        if uf.union(i, j):
            edges.append((i, j, weight))
            if len(edges) == matrix.n - 1:
                break
    return SpanningForest(n_nodes=matrix.n, edges=tuple(edges))


@dataclass(frozen=True)
class _DistanceProfile:
    """Per-graph ingredients of the dissimilarity score: the mean node
    distance distribution and the node dispersion."""

    mean_distribution: np.ndarray
    dispersion: float


def _entropy(p: np.ndarray) -> float:
    mass = p[p > 0.0]
    return float(-(mass * np.log(mass)).sum())


def _profile_from_adjacency(adj: sp.csr_matrix) -> _DistanceProfile:
    n = adj.shape[0]
    if n <= 1:
        return _DistanceProfile(np.array([1.0]), 0.0)
    dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    np.fill_diagonal(dist, np.nan)
    unreachable = np.isinf(dist)
    finite = dist[~unreachable & ~np.isnan(dist)]
    diam = int(finite.max()) if finite.size else 0
    # Bin d=1..n-1 at index d-1; unreachable mass in the last bin.
    dist[unreachable] = n
    profiles = np.zeros((n, n))
    for i in range(n):
        row = dist[i]
        idx = row[~np.isnan(row)].astype(np.int64) - 1
        profiles[i] = np.bincount(idx, minlength=n)
    profiles /= n - 1

    mu = profiles.mean(axis=0)
    divergence = max(0.0, _entropy(mu) - sum(_entropy(p) for p in profiles) / n)
    dispersion = 0.0 if divergence == 0.0 else divergence / math.log(diam + 1)
    return _DistanceProfile(mu, dispersion)


def _graph_profile(g: nx.Graph, nodes: Sequence) -> _DistanceProfile:
    index = {node: i for i, node in enumerate(nodes)}
    n = len(nodes)
    rows, cols = [], []
    for a, b in g.edges():
        rows.append(index[a])
        cols.append(index[b])
    data = np.ones(len(rows))
    adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    return _profile_from_adjacency(adj + adj.T)


def _d_from_profiles(p1: _DistanceProfile, p2: _DistanceProfile, w1: float, w2: float) -> float:
    mid = 0.5 * (p1.mean_distribution + p2.mean_distribution)
    jsd = max(0.0, _entropy(mid) - 0.5 * (_entropy(p1.mean_distribution) + _entropy(p2.mean_distribution)))
    return w1 * math.sqrt(jsd / LN2) + w2 * abs(math.sqrt(p1.dispersion) - math.sqrt(p2.dispersion))


def schieber_d(g1: nx.Graph, g2: nx.Graph, w1: float = 0.5, w2: float = 0.5) -> float:
    """Structural dissimilarity of two graphs on the same node set, in [0, 1].

    Each node's distribution of shortest-path hop distances (plus an
    unreachable bin) feeds two terms: the root Jensen-Shannon divergence
    between the graphs' mean distance distributions, normalized by ln 2,
    and the difference in root node dispersion, where dispersion is the
    Jensen-Shannon divergence of all node distributions normalized by
    ln(diameter + 1). Identical graphs score exactly 0.
    """
    if w1 < 0 or w2 < 0 or w1 + w2 > 1.0 + 1e-12:
        raise ValueError("weights must be non-negative and sum to at most 1")
    if set(g1.nodes) != set(g2.nodes):
        raise ValueError("graphs must share the same node set")
    nodes = sorted(g1.nodes)
    if len(nodes) <= 1:
        return 0.0
    return _d_from_profiles(_graph_profile(g1, nodes), _graph_profile(g2, nodes), w1, w2)


@dataclass
class DValueSeries:
    """Dissimilarity between consecutive forests; one value per pair."""

    values: list[float]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "d_value"])
            for i, value in enumerate(self.values, start=1):
                writer.writerow([i, repr(value)])


def _forest_profile(forest: SpanningForest) -> _DistanceProfile:
    n = forest.n_nodes
    rows = [u for u, _, _ in forest.edges]
    cols = [v for _, v, _ in forest.edges]
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return _profile_from_adjacency(adj + adj.T)


def mmst_sequence(
    matrix: DistanceMatrix,
    iterations: int,
    w1: float = 0.5,
    w2: float = 0.5,
) -> tuple[list[SpanningForest], DValueSeries]:
    """Iterate minimum spanning forests, each excluding all edges used by its
    predecessors, and score consecutive forests' dissimilarity.

    Forests are pairwise edge-disjoint by construction. The loop stops early
    once every pair has been used. D-values treat forests as unweighted
    graphs on the full cell set.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    n = matrix.n
    iu, ju, w = _sorted_pairs(matrix)
    alive = np.ones(len(w), dtype=bool)
    pairs = list(zip(iu.tolist(), ju.tolist(), w.tolist()))

    forests: list[SpanningForest] = []
    for _ in range(iterations):
        if not alive.any():
            break
        uf = _UnionFind(n)
        edges: list[tuple[int, int, float]] = []
        for idx, (i, j, weight) in enumerate(pairs):
            if not alive[idx]:
                continue
            if uf.union(i, j):
                edges.append((i, j, weight))
                alive[idx] = False
                if len(edges) == n - 1:
                    break
        forests.append(SpanningForest(n_nodes=n, edges=tuple(edges)))

    profiles = [_forest_profile(f) for f in forests]
    d_values = [
        _d_from_profiles(profiles[t], profiles[t + 1], w1, w2)
        for t in range(len(profiles) - 1)
    ]
    log.info("mmst: %d forests (%d requested), %d trees among them",
             len(forests), iterations, sum(f.is_spanning_tree for f in forests))
    return forests, DValueSeries(values=d_values)


def aggregate_backbone(forests: Sequence[SpanningForest], m: int) -> nx.Graph:
    """Union of the first ``m`` forests' edges with their original distance
    weights; the node set is every cell, spanned or not."""
    if not 1 <= m <= len(forests):
        raise ValueError(f"m must be in 1..{len(forests)}")
    g = nx.Graph()
    g.add_nodes_from(range(forests[0].n_nodes))
    for forest in forests[:m]:
        g.add_weighted_edges_from(forest.edges)
    return g


def write_backbone_edge_csv(g: nx.Graph, path: str | Path, labels: Sequence[str] | None = None) -> None:
    """Edge list as ``cell_a,cell_b,distance``."""
    name = (lambda i: labels[i]) if labels is not None else str
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["cell_a", "cell_b", "distance"])
        for a, b, data in sorted(g.edges(data=True)):
            writer.writerow([name(a), name(b), repr(data["weight"])])
