"""Pedestrian-scale street-network analysis: moving-window centralities,
land-use accessibility, mixed-use diversity and statistical aggregation over
cleaned, optionally decomposed networks."""

from .graph import Edge, GraphError, Multigraph, Node, ValidationReport, validate
from .geojson import ParseError, export_network, import_network
from .projection import ProjectionError, lonlat_to_utm, project_wgs_to_utm, utm_zone
from .clean import (
    CleanConfig,
    consolidate_nodes,
    infer_simple_geoms,
    remove_dangling_nodes,
    remove_filler_nodes,
)
from .structure import NetworkStructure, build_structure, decompose, structure_to_graph, to_dual
from .metrics import MetricsTable, column_name
from .centrality import AnalysisConfig, ShortestTree, node_centrality, segment_centrality, shortest_tree, simplest_tree
from .layers import (
    AggregationConfig,
    DataEntry,
    DecayParams,
    aggregate_reachable,
    assign_to_network,
    beta_from_distance,
    compute_accessibilities,
    compute_mixed_uses,
    compute_stats,
    decay_weight,
    distance_from_beta,
    hill_branch_wt_diversity,
    hill_diversity,
    load_data_points,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationConfig",
    "AnalysisConfig",
    "CleanConfig",
    "DataEntry",
    "DecayParams",
    "Edge",
    "GraphError",
    "MetricsTable",
    "Multigraph",
    "NetworkStructure",
    "Node",
    "ParseError",
    "ProjectionError",
    "ShortestTree",
    "ValidationReport",
    "__version__",
    "aggregate_reachable",
    "assign_to_network",
    "beta_from_distance",
    "build_structure",
    "column_name",
    "compute_accessibilities",
    "compute_mixed_uses",
    "compute_stats",
    "consolidate_nodes",
    "decay_weight",
    "decompose",
    "distance_from_beta",
    "export_network",
    "hill_branch_wt_diversity",
    "hill_diversity",
    "import_network",
    "infer_simple_geoms",
    "load_data_points",
    "lonlat_to_utm",
    "node_centrality",
    "project_wgs_to_utm",
    "remove_dangling_nodes",
    "remove_filler_nodes",
    "segment_centrality",
    "shortest_tree",
    "simplest_tree",
    "structure_to_graph",
    "to_dual",
    "utm_zone",
    "validate",
]
