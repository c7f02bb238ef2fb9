"""Surname-network analysis of urban population structure.

Builds two complementary views of a city from person records that carry a
paternal surname, a maternal surname, coordinates, and a raw socioeconomic
value: a surname pair-affinity network and a spatial isonymy network over
grid cells, plus community detection and downstream summaries for both.
"""

from isonymics.ingest import (
    AreaCell,
    Grid,
    PersonRecord,
    build_grid,
    normalize_ses,
    normalize_surname,
    parse_records,
)
from isonymics.affinity import AffinityGraph, build_pair_graph, k_core, prune_expected_threshold
from isonymics.isonymy import DistanceMatrix, alpha, distance, distance_matrix, isonymy
from isonymics.backbone import (
    DValueSeries,
    SpanningForest,
    aggregate_backbone,
    mmst_sequence,
    schieber_d,
    spanning_forest,
)
from isonymics.community import (
    EnsembleResult,
    Partition,
    ensemble_partition,
    louvain,
    modularity,
    normalized_mutual_information,
)
from isonymics.report import (
    ClusterSummary,
    MixtureFit,
    affinity_cluster_summary,
    export_geojson,
    fit_distance_mixture,
    graph_stats,
    isonymy_cluster_summary,
    pearson,
    representation_over_time,
    skeleton_walk,
)
from isonymics.synth import GroupSpec, PopulationSpec, generate_population

__version__ = "0.1.0"

__all__ = [
    "AffinityGraph",
    "AreaCell",
    "ClusterSummary",
    "DValueSeries",
    "DistanceMatrix",
    "EnsembleResult",
    "Grid",
    "GroupSpec",
    "MixtureFit",
    "Partition",
    "PersonRecord",
    "PopulationSpec",
    "affinity_cluster_summary",
    "aggregate_backbone",
    "alpha",
    "build_grid",
    "build_pair_graph",
    "distance",
    "distance_matrix",
    "ensemble_partition",
    "export_geojson",
    "fit_distance_mixture",
    "generate_population",
    "graph_stats",
    "isonymy",
    "isonymy_cluster_summary",
    "k_core",
    "louvain",
    "mmst_sequence",
    "modularity",
    "normalize_ses",
    "normalize_surname",
    "normalized_mutual_information",
    "parse_records",
    "pearson",
    "prune_expected_threshold",
    "representation_over_time",
    "schieber_d",
    "skeleton_walk",
    "spanning_forest",
]
