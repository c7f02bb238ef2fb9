"""Paternal-maternal surname co-occurrence network and its reductions."""

from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import networkx as nx

from isonymics.ingest import PersonRecord

log = logging.getLogger(__name__)


@dataclass
class AffinityGraph:
    """Surname network: nodes carry occurrence counts and mean SES, edges
    carry the number of individuals sharing the surname pair (either order).

    ``total_n`` is the number of individuals the graph was built from, the
    denominator of the expected co-occurrence count.
    """

    graph: nx.Graph
    total_n: int

    @property
    def n_nodes(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def n_edges(self) -> int:
        return self.graph.number_of_edges()


def build_pair_graph(
    records: Sequence[PersonRecord],
    ses: Sequence[float] | None = None,
) -> AffinityGraph:
    """Count surname pairs over individuals into an undirected weighted graph.

    A person's node counts increment for both surnames; a paternal=maternal
    record contributes two tokens to that node but no edge (the graph stays
    simple). ``ses`` supplies per-record SES values to average into the
    node attribute ``ses_mean`` (the pipeline passes min-max normalized
    values); it defaults to the records' raw SES.
    """
    if ses is None:
        ses_values = [r.ses_raw for r in records]
    else:
        if len(ses) != len(records):
            raise ValueError("ses must align with records")
        ses_values = list(ses)

    n_s: dict[str, int] = {}
    ses_sum: dict[str, float] = {}
    ses_n: dict[str, int] = {}
    weights: dict[tuple[str, str], int] = {}
    for rec, z in zip(records, ses_values):
        for name in (rec.paternal, rec.maternal):
            n_s[name] = n_s.get(name, 0) + 1
            ses_sum[name] = ses_sum.get(name, 0.0) + z
            ses_n[name] = ses_n.get(name, 0) + 1
        if rec.paternal != rec.maternal:
            pair = (rec.paternal, rec.maternal) if rec.paternal < rec.maternal else (rec.maternal, rec.paternal)
            weights[pair] = weights.get(pair, 0) + 1

    g = nx.Graph()
    for name in sorted(n_s):
        g.add_node(name, n_s=n_s[name], ses_mean=ses_sum[name] / ses_n[name])
    for (a, b), w in sorted(weights.items()):
        g.add_edge(a, b, weight=w)
    return AffinityGraph(graph=g, total_n=len(records))


def prune_expected_threshold(ag: AffinityGraph, k_factor: float) -> AffinityGraph:
    """Drop edges whose weight falls below ``k_factor`` times the expected
    co-occurrence count ``n_s1 * n_s2 / N`` under random pairing, then drop
    nodes left isolated. Requires ``k_factor > 1``.
    """
    if k_factor <= 1:
        raise ValueError("k_factor must be greater than 1")
    if ag.total_n <= 0:
        raise ValueError("graph has no individuals")
    g = ag.graph
    kept = nx.Graph()
    for node, attrs in g.nodes(data=True):
        kept.add_node(node, **attrs)
    n = float(ag.total_n)
    for a, b, data in g.edges(data=True):
        threshold = k_factor * g.nodes[a]["n_s"] * g.nodes[b]["n_s"] / n
        if data["weight"] >= threshold:
            kept.add_edge(a, b, **data)
    isolated = [node for node, deg in kept.degree() if deg == 0]
    kept.remove_nodes_from(isolated)
    log.info("threshold prune k=%.3g: %d -> %d nodes, %d -> %d edges",
             k_factor, g.number_of_nodes(), kept.number_of_nodes(),
             g.number_of_edges(), kept.number_of_edges())
    return AffinityGraph(graph=kept, total_n=ag.total_n)


def k_core(g: nx.Graph, core_order: int) -> nx.Graph:
    """Maximal subgraph in which every node has degree >= ``core_order``.

    Peels nodes of insufficient degree until a fixed point; degree is the
    unweighted edge count. The empty graph is a valid result.
    """
    if core_order < 0:
        raise ValueError("core_order must be non-negative")
    degree = dict(g.degree())
    removed: set = set()
    queue = deque(node for node, deg in degree.items() if deg < core_order)
    while queue:
        node = queue.popleft()
        if node in removed:
            continue
        removed.add(node)
        for neighbor in g.neighbors(node):
            if neighbor in removed:
                continue
            degree[neighbor] -= 1
            if degree[neighbor] < core_order:
                queue.append(neighbor)
    return g.subgraph(node for node in g.nodes if node not in removed).copy()


def write_edge_csv(g: nx.Graph, path: str | Path) -> None:
    """Edge list as ``surname_a,surname_b,weight`` (canonical pair order)."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["surname_a", "surname_b", "weight"])
        for a, b, data in sorted(g.edges(data=True), key=lambda e: (min(e[0], e[1]), max(e[0], e[1]))):
            lo, hi = (a, b) if a < b else (b, a)
            writer.writerow([lo, hi, data.get("weight", 1)])


def write_node_table(
    g: nx.Graph,
    path: str | Path,
    partition: dict | None = None,
) -> None:
    """Node attribute table ``surname,n_s,ses_mean,community``; the community
    column stays empty until a partition is supplied."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["surname", "n_s", "ses_mean", "community"])
        for node in sorted(g.nodes):
            attrs = g.nodes[node]
            community = "" if partition is None or node not in partition else partition[node]
            writer.writerow([node, attrs.get("n_s", ""), attrs.get("ses_mean", ""), community])


def write_graphml(g: nx.Graph, path: str | Path) -> None:
    nx.write_graphml(g, path)
