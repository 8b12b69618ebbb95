"""Vertex-fault-tolerant (1+eps)-spanners for doubling metrics."""

from ftspan.baseline import WeightedGraph, light_spanner, lightness, mst, shortest_dist
from ftspan.construct import Config, SpannerGraph, build_ft_spanner, classify_lnf
from ftspan.metric import Metric, ball, load_points, normalize, spread
from ftspan.net_tree import NetTree, build_net_tree
from ftspan.verify import (AuditReport, audits, exhaustive_ft_check,
                           greedy_ft_oracle, sampled_ft_check,
                           stretch_under_faults)

__version__ = "0.1.0"

__all__ = [
    "AuditReport", "Config", "Metric", "NetTree", "SpannerGraph",
    "WeightedGraph", "audits", "ball", "build_ft_spanner", "build_net_tree",
    "classify_lnf", "exhaustive_ft_check", "greedy_ft_oracle", "light_spanner",
    "lightness", "load_points", "mst", "normalize", "sampled_ft_check",
    "shortest_dist", "spread", "stretch_under_faults",
]
