"""Downstream analyses: cluster summaries, diversity-SES correlation,
distance-histogram mixture fits, skeleton walks, and exports."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import networkx as nx
import numpy as np
from scipy.special import logsumexp

from isonymics.community import Partition
from isonymics.ingest import AreaCell, cells_to_geojson

log = logging.getLogger(__name__)


@dataclass
class ClusterSummary:
    """Per-community SES statistics and its most characteristic surnames."""

    community: int
    size: int
    ses_mean: float
    ses_sd: float
    top_surnames: list[str]
    alpha_mean: float | None = None


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def affinity_cluster_summary(
    g: nx.Graph,
    partition: Partition,
    top_k: int = 10,
) -> list[ClusterSummary]:
    """Summaries for surname-network communities: SES mean and sample sd over
    member nodes, top surnames ranked by within-community degree."""
    summaries = []
    for cid, members in partition.communities().items():
        if not members:
            log.warning("community %d is empty; skipped", cid)
            continue
        member_set = set(members)
        ses = [g.nodes[node]["ses_mean"] for node in members]
        mean, sd = _mean_sd(ses)
        internal_degree = {
            node: sum(1 for nb in g.neighbors(node) if nb in member_set)
            for node in members
        }
        ranked = sorted(members, key=lambda s: (-internal_degree[s], -g.nodes[s].get("n_s", 0), s))
        summaries.append(
            ClusterSummary(
                community=cid,
                size=len(members),
                ses_mean=mean,
                ses_sd=sd,
                top_surnames=ranked[:top_k],
            )
        )
    return summaries


def isonymy_cluster_summary(
    cells: Sequence[AreaCell],
    partition: Partition,
    top_k: int = 10,
    candidate_pool: int = 500,
) -> list[ClusterSummary]:
    """Summaries for spatial communities over cells (partition keys are cell
    indices into ``cells``).

    Top surnames are the most distinctive ones: frequent inside the
    community but infrequent outside, scored as p_in - p_out over
    community-aggregated frequencies. Candidates are restricted to the
    union of each member cell's ``candidate_pool`` most frequent surnames.
    """
    summaries = []
    for cid, members in partition.communities().items():
        if not members:
            log.warning("community %d is empty; skipped", cid)
            continue
        member_cells = [cells[i] for i in members]
        outside_cells = [cells[i] for i in range(len(cells)) if i not in set(members)]

        in_tokens: Counter = Counter()
        for cell in member_cells:
            in_tokens.update(cell.tokens)
        out_tokens: Counter = Counter()
        for cell in outside_cells:
            out_tokens.update(cell.tokens)
        in_total = sum(in_tokens.values())
        out_total = sum(out_tokens.values())

        candidates: set[str] = set()
        for cell in member_cells:
            top = sorted(cell.freq.items(), key=lambda kv: (-kv[1], kv[0]))[:candidate_pool]
            candidates.update(s for s, _ in top)

        def distinctiveness(s: str) -> float:
            p_in = in_tokens.get(s, 0) / in_total
            p_out = out_tokens.get(s, 0) / out_total if out_total else 0.0
            return p_in - p_out

        ranked = sorted(candidates, key=lambda s: (-distinctiveness(s), s))
        ses_values = [c.ses_mean for c in member_cells]
        mean, sd = _mean_sd(ses_values)
        summaries.append(
            ClusterSummary(
                community=cid,
                size=len(members),
                ses_mean=mean,
                ses_sd=sd,
                top_surnames=ranked[:top_k],
                alpha_mean=sum(c.alpha for c in member_cells) / len(member_cells),
            )
        )
    return summaries


def write_summary_csv(summaries: Sequence[ClusterSummary], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["community", "size", "ses_mean", "ses_sd", "alpha_mean", "top_surnames"])
        for s in summaries:
            writer.writerow([
                s.community,
                s.size,
                repr(s.ses_mean),
                repr(s.ses_sd),
                "" if s.alpha_mean is None else repr(s.alpha_mean),
                " ".join(s.top_surnames),
            ])


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    if len(x) < 2:
        raise ValueError("need at least two points")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance")
    return float((dx * dy).sum() / (sx * sy))


@dataclass
class MixtureFit:
    """Univariate Gaussian mixture selected by BIC."""

    n_components: int
    components: list[tuple[float, float, float]]  # (weight, mean, sd)
    log_likelihood: float
    bic: float


_SD_FLOOR = 1e-6


def _kmeanspp_centers(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [values[rng.integers(len(values))]]
    for _ in range(1, k):
        d2 = np.min([(values - c) ** 2 for c in centers], axis=0)
        total = d2.sum()
        if total <= 0.0:
            centers.append(centers[0])
            continue
        centers.append(values[rng.choice(len(values), p=d2 / total)])
    return np.array(centers)


def _log_norm_pdf(values: np.ndarray, mean: float, sd: float) -> np.ndarray:
    return -0.5 * ((values - mean) / sd) ** 2 - math.log(sd) - 0.5 * math.log(2 * math.pi)


def _em_fit(values: np.ndarray, k: int, rng: np.random.Generator, max_steps: int, tol: float):
    """EM for a k-component mixture; collapsing components are pruned.

    Returns ``(weights, means, sds, ll, history)`` where ``history`` is the
    log-likelihood after each EM step (non-decreasing between prunes).
    """
    centers = _kmeanspp_centers(values, k, rng)
    nearest = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
    weights, means, sds = [], [], []
    global_sd = max(float(values.std()), _SD_FLOOR)
    for j in range(k):
        member = values[nearest == j]
        if member.size == 0:
            continue
        weights.append(member.size / len(values))
        means.append(float(member.mean()))
        sds.append(max(float(member.std()), 0.1 * global_sd, _SD_FLOOR))
    weights = np.array(weights)
    means = np.array(means)
    sds = np.array(sds)

    prev_ll = -np.inf
    ll = -np.inf
    history: list[float] = []
    for _ in range(max_steps):
        log_joint = np.log(weights)[None, :] + np.vstack(
            [_log_norm_pdf(values, m, s) for m, s in zip(means, sds)]
        ).T
        log_total = logsumexp(log_joint, axis=1)
        ll = float(log_total.sum())
        history.append(ll)
        resp = np.exp(log_joint - log_total[:, None])

        mass = resp.sum(axis=0)
        weights = mass / len(values)
        means = (resp * values[:, None]).sum(axis=0) / mass
        sds = np.sqrt((resp * (values[:, None] - means[None, :]) ** 2).sum(axis=0) / mass)

        keep = (sds >= _SD_FLOOR) & (weights > 1e-12)
        if not keep.all():
            weights, means, sds = weights[keep], means[keep], sds[keep]
            weights = weights / weights.sum()
            prev_ll = -np.inf
            if weights.size == 0:
                raise ValueError("all components degenerate")
            continue
        if np.isfinite(prev_ll) and abs(ll - prev_ll) < tol * abs(prev_ll):
            break
        prev_ll = ll
    return weights, means, sds, ll, history


def fit_distance_mixture(
    values: Sequence[float],
    max_components: int,
    seed: int = 0,
    max_steps: int = 200,
    tol: float = 1e-8,
) -> MixtureFit:
    """Fit univariate Gaussian mixtures for 1..max_components components with
    seeded center initialization and return the BIC-minimal fit.

    BIC uses 3k - 1 free parameters per k-component mixture.
    """
    data = np.asarray(values, dtype=float)
    if data.size < 10:
        raise ValueError("need at least 10 values")
    if max_components < 1:
        raise ValueError("max_components must be at least 1")

    best: MixtureFit | None = None
    for k in range(1, max_components + 1):
        rng = np.random.default_rng(seed + k)
        weights, means, sds, ll, _ = _em_fit(data, k, rng, max_steps, tol)
        k_eff = len(weights)
        bic = -2.0 * ll + (3 * k_eff - 1) * math.log(data.size)
        order = np.argsort(means)
        fit = MixtureFit(
            n_components=k_eff,
            components=[(float(weights[j]), float(means[j]), float(sds[j])) for j in order],
            log_likelihood=ll,
            bic=bic,
        )
        if best is None or fit.bic < best.bic:
            best = fit
    assert best is not None
    return best


def skeleton_walk(
    g: nx.Graph,
    partition: Partition,
    steps: int,
    start_community: int | None = None,
) -> list[tuple[Hashable, dict[int, int]]]:
    """Walk the network skeleton through high-degree nodes.

    The walk starts at the highest-degree node of ``start_community`` (or of
    the whole graph when None) and repeatedly jumps to the unvisited
    neighbor of highest degree, breaking ties toward the lowest node id.
    Each step reports the community composition of the current node's
    neighborhood. The walk truncates when no unvisited neighbor remains.
    """
    if g.number_of_nodes() == 0:
        raise ValueError("graph is empty")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    degree = dict(g.degree())
    if start_community is None:
        pool = list(g.nodes)
    else:
        pool = [n for n in g.nodes if partition.assignment[n] == start_community]
        if not pool:
            raise ValueError(f"no node in community {start_community}")
    current = min(pool, key=lambda n: (-degree[n], n))

    visited = {current}
    walk: list[tuple[Hashable, dict[int, int]]] = []
    for _ in range(steps):
        histogram = Counter(partition.assignment[nb] for nb in g.neighbors(current))
        walk.append((current, dict(sorted(histogram.items()))))
        candidates = [nb for nb in g.neighbors(current) if nb not in visited]
        if not candidates:
            break
        current = min(candidates, key=lambda n: (-degree[n], n))
        visited.add(current)
    return walk


def representation_over_time(
    roster: Sequence[tuple[str, str]],
    communities: dict[str, int],
    periods: Sequence[str] | None = None,
) -> dict[str, dict[int, float]]:
    """Fraction of roster entries per period whose surname belongs to each
    community; surnames missing from the mapping count toward the
    denominator only, so per-period fractions sum to at most 1."""
    by_period: dict[str, list[str]] = {}
    for period, surname in roster:
        by_period.setdefault(period, []).append(surname)
    if periods is None:
        period_list = sorted(by_period)
        if not period_list:
            raise ValueError("roster is empty")
    else:
        period_list = list(periods)
    community_ids = sorted(set(communities.values()))

    table: dict[str, dict[int, float]] = {}
    for period in period_list:
        entries = by_period.get(period, [])
        if not entries:
            log.warning("period %r has no roster entries", period)
            table[period] = {cid: 0.0 for cid in community_ids}
            continue
        tally = Counter(communities[s] for s in entries if s in communities)
        table[period] = {cid: tally.get(cid, 0) / len(entries) for cid in community_ids}
    return table


def write_representation_csv(table: dict[str, dict[int, float]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["period", "community", "fraction"])
        for period in table:
            for cid, fraction in table[period].items():
                writer.writerow([period, cid, repr(fraction)])


@dataclass
class GraphStats:
    nodes: int
    edges: int
    density: float
    mean_degree: float
    diameter: int
    connected: bool


def graph_stats(g: nx.Graph) -> GraphStats:
    """Basic structure numbers; the diameter of a disconnected graph is the
    largest component's, flagged via ``connected=False``."""
    n = g.number_of_nodes()
    if n == 0:
        raise ValueError("graph is empty")
    e = g.number_of_edges()
    density = 0.0 if n < 2 else 2.0 * e / (n * (n - 1))
    connected = nx.is_connected(g) if n > 0 else False
    if connected:
        diameter = nx.diameter(g)
    else:
        largest = max(nx.connected_components(g), key=lambda c: (len(c), sorted(c)[0] if c else 0))
        sub = g.subgraph(largest)
        diameter = nx.diameter(sub) if len(largest) > 1 else 0
    return GraphStats(
        nodes=n,
        edges=e,
        density=density,
        mean_degree=2.0 * e / n,
        diameter=int(diameter),
        connected=connected,
    )


def export_geojson(cells: Sequence[AreaCell], partition: Partition, path: str | Path) -> None:
    """GeoJSON FeatureCollection of cell polygons with community, SES,
    diversity, and count properties (partition keys are cell indices)."""
    communities = {cells[i].cell_id: cid for i, cid in partition.assignment.items()}
    cells_to_geojson(cells, path, communities=communities)


def write_mixture_report(fits: dict[str, MixtureFit], histograms: dict[str, Sequence[float]],
                         path: str | Path, bins: int = 60) -> None:
    """Mixture parameters plus histogram counts per metric, for external
    plotting."""
    payload = {}
    for metric, fit in fits.items():
        values = np.asarray(histograms[metric], dtype=float)
        counts, edges = np.histogram(values, bins=bins)
        payload[metric] = {
            "n_components": fit.n_components,
            "components": [
                {"weight": w, "mean": m, "sd": s} for w, m, s in fit.components
            ],
            "log_likelihood": fit.log_likelihood,
            "bic": fit.bic,
            "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
        }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
