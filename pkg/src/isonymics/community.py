"""Seeded Louvain modularity optimization and the ensemble selection protocol."""

from __future__ import annotations

import csv
import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import networkx as nx

log = logging.getLogger(__name__)

_GAIN_EPS = 1e-9


@dataclass
class Partition:
    """Total node-to-community assignment with its modularity score.

    Community ids are contiguous integers starting at 0.
    """

    assignment: dict[Hashable, int]
    modularity: float

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values())) if self.assignment else 0

    def communities(self) -> dict[int, list]:
        groups: dict[int, list] = {}
        for node, cid in self.assignment.items():
            groups.setdefault(cid, []).append(node)
        return {cid: sorted(members) for cid, members in sorted(groups.items())}

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["node_id", "community"])
            for node in sorted(self.assignment):
                writer.writerow([node, self.assignment[node]])


def _edge_weight(data: dict, weight: str | None) -> float:
    if weight is None:
        return 1.0
    return float(data.get(weight, 1.0))


def modularity(g: nx.Graph, assignment: dict, weight: str | None = "weight") -> float:
    """Newman modularity of a partition, with edge weights unless ``weight``
    is None. Self-loops count twice toward both degree and internal weight."""
    for node in g.nodes:
        if node not in assignment:
            raise ValueError(f"node {node!r} has no community assignment")
    two_m = 0.0
    internal: dict[int, float] = {}
    degree_sum: dict[int, float] = {}
    for a, b, data in g.edges(data=True):
        w = _edge_weight(data, weight)
        if w < 0:
            raise ValueError("negative edge weights are not supported")
        ca, cb = assignment[a], assignment[b]
        if a == b:
            two_m += 2.0 * w
            internal[ca] = internal.get(ca, 0.0) + 2.0 * w
            degree_sum[ca] = degree_sum.get(ca, 0.0) + 2.0 * w
        else:
            two_m += 2.0 * w
            if ca == cb:
                internal[ca] = internal.get(ca, 0.0) + 2.0 * w
            degree_sum[ca] = degree_sum.get(ca, 0.0) + w
            degree_sum[cb] = degree_sum.get(cb, 0.0) + w
    if two_m == 0.0:
        return 0.0
    q = 0.0
    for cid, dsum in degree_sum.items():
        q += internal.get(cid, 0.0) / two_m - (dsum / two_m) ** 2
    return q


class _Level:
    """One aggregation level: adjacency without self-loops, self-loop weights
    kept separately (a self-loop of weight s contributes 2s to the degree)."""

    def __init__(self, n: int, adj: list[dict[int, float]], self_w: list[float]) -> None:
        self.n = n
        self.adj = adj
        self.self_w = self_w
        self.k = [sum(nb.values()) + 2.0 * s for nb, s in zip(adj, self_w)]
        self.two_m = sum(self.k)


def _local_moves(level: _Level, rng: random.Random) -> tuple[list[int], bool]:
    """Greedy modularity moves until a full pass changes nothing.

    Each node joins the neighboring community with the largest gain
    (ties broken toward the lowest community id); moves with gain at or
    below the convergence threshold are skipped.
    """
    n = level.n
    node2com = list(range(n))
    tot = list(level.k)
    m = level.two_m / 2.0
    two_m_sq = 2.0 * m * m
    order = list(range(n))
    rng.shuffle(order)

    moved_any = False
    while True:
        moved = 0
        for i in order:
            c0 = node2com[i]
            k_i = level.k[i]
            nbw: dict[int, float] = {}
            for j, w in level.adj[i].items():
                c = node2com[j]
                nbw[c] = nbw.get(c, 0.0) + w
            tot[c0] -= k_i
            stay_gain = nbw.get(c0, 0.0) / m - tot[c0] * k_i / two_m_sq
            best_c = c0
            best_gain = stay_gain
            for c in sorted(nbw):
                if c == c0:
                    continue
                gain = nbw[c] / m - tot[c] * k_i / two_m_sq
                if gain > best_gain and gain - stay_gain > _GAIN_EPS:
                    best_gain = gain
                    best_c = c
            node2com[i] = best_c
            tot[best_c] += k_i
            if best_c != c0:
                moved += 1
        if moved == 0:
            break
        moved_any = True
    return node2com, moved_any


def _aggregate(level: _Level, node2com: list[int]) -> tuple[_Level, list[int]]:
    ids = sorted(set(node2com))
    relabel = {old: new for new, old in enumerate(ids)}
    mapping = [relabel[c] for c in node2com]
    n = len(ids)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    self_w = [0.0] * n
    for i in range(level.n):
        ci = mapping[i]
        self_w[ci] += level.self_w[i]
        for j, w in level.adj[i].items():
            if j < i:
                continue
            cj = mapping[j]
            if ci == cj:
                self_w[ci] += w
            else:
                adj[ci][cj] = adj[ci].get(cj, 0.0) + w
                adj[cj][ci] = adj[cj].get(ci, 0.0) + w
    return _Level(n, adj, self_w), mapping


def _relabel_contiguous(assignment: dict) -> dict:
    relabel: dict[int, int] = {}
    out = {}
    for node in sorted(assignment):
        cid = assignment[node]
        if cid not in relabel:
            relabel[cid] = len(relabel)
        out[node] = relabel[cid]
    return out


def louvain(g: nx.Graph, seed: int, weight: str | None = "weight") -> Partition:
    """Two-phase Louvain with seeded node order, deterministic tie-breaks,
    and aggregation until no move yields a modularity gain above 1e-9.

    ``weight=None`` treats the graph as unweighted. A graph without edges
    partitions into singletons with modularity 0. Identical seeds produce
    identical partitions.
    """
    if g.number_of_nodes() == 0:
        raise ValueError("graph is empty")
    nodes = sorted(g.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    n = len(nodes)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    self_w = [0.0] * n
    for a, b, data in g.edges(data=True):
        w = _edge_weight(data, weight)
        if w < 0:
            raise ValueError("negative edge weights are not supported")
        ia, ib = index[a], index[b]
        if ia == ib:
            self_w[ia] += w
        else:
            adj[ia][ib] = adj[ia].get(ib, 0.0) + w
            adj[ib][ia] = adj[ib].get(ia, 0.0) + w

    level = _Level(n, adj, self_w)
    if level.two_m == 0.0:
        assignment = {node: i for i, node in enumerate(nodes)}
        return Partition(assignment=assignment, modularity=0.0)

    rng = random.Random(seed)
    node_to_final = list(range(n))
    while True:
        node2com, moved = _local_moves(level, rng)
        if not moved:
            break
        level, mapping = _aggregate(level, node2com)
        node_to_final = [mapping[c] for c in node_to_final]
        if level.n == 1:
            break

    assignment = _relabel_contiguous({node: node_to_final[index[node]] for node in nodes})
    return Partition(assignment=assignment, modularity=modularity(g, assignment, weight))


@dataclass
class EnsembleResult:
    """Outcome of repeated seeded Louvain runs plus the selected partition."""

    partition: Partition
    seeds: list[int]
    community_counts: list[int]
    modularities: list[float]
    chosen_index: int

    def write_report(self, path: str | Path) -> None:
        payload = {
            "trials": [
                {"seed": s, "n_communities": c, "modularity": q}
                for s, c, q in zip(self.seeds, self.community_counts, self.modularities)
            ],
            "chosen_index": self.chosen_index,
            "chosen_seed": self.seeds[self.chosen_index],
            "n_communities": self.partition.n_communities,
            "modularity": self.partition.modularity,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def ensemble_partition(
    g: nx.Graph,
    trials: int,
    base_seed: int,
    weight: str | None = "weight",
) -> EnsembleResult:
    """Run Louvain with consecutive seeds and select a representative run:
    the modal community count (ties favor the smaller count), then the
    highest modularity within that modal group."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = list(range(base_seed, base_seed + trials))
    partitions = [louvain(g, seed=s, weight=weight) for s in seeds]
    counts = [p.n_communities for p in partitions]
    qs = [p.modularity for p in partitions]

    frequency = Counter(counts)
    modal = max(frequency, key=lambda c: (frequency[c], -c))
    chosen = max(
        (i for i in range(trials) if counts[i] == modal),
        key=lambda i: (qs[i], -i),
    )
    log.info("ensemble: counts=%s, modal=%d, chosen seed %d (Q=%.4f)",
             counts, modal, seeds[chosen], qs[chosen])
    return EnsembleResult(
        partition=partitions[chosen],
        seeds=seeds,
        community_counts=counts,
        modularities=qs,
        chosen_index=chosen,
    )


def normalized_mutual_information(labels_a: Sequence, labels_b: Sequence) -> float:
    """NMI with arithmetic-mean normalization, in [0, 1]."""
    if len(labels_a) != len(labels_b):
        raise ValueError("label sequences must align")
    n = len(labels_a)
    if n == 0:
        raise ValueError("no labels")
    joint = Counter(zip(labels_a, labels_b))
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    h_a = -sum((c / n) * math.log(c / n) for c in count_a.values())
    h_b = -sum((c / n) * math.log(c / n) for c in count_b.values())
    if h_a + h_b == 0.0:
        return 1.0
    info = 0.0
    for (a, b), c in joint.items():
        p = c / n
        info += p * math.log(p * n * n / (count_a[a] * count_b[b]))
    return 2.0 * info / (h_a + h_b)
