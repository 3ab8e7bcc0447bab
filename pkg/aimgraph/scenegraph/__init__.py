"""Graph observation of the traffic scene."""

from aimgraph.scenegraph.features import bearing, pair_distance
from aimgraph.scenegraph.graph import (
    EDGE_FEATURES,
    RELATIONS,
    VERTEX_FEATURES,
    EdgeType,
    SceneGraph,
    build_graph,
    dump_graph,
    empty_graph,
    normalize_features,
    observe,
)

__all__ = [
    "EDGE_FEATURES",
    "RELATIONS",
    "VERTEX_FEATURES",
    "EdgeType",
    "SceneGraph",
    "bearing",
    "build_graph",
    "dump_graph",
    "empty_graph",
    "normalize_features",
    "observe",
    "pair_distance",
]
