from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from aimgraph.behavior.leaders import find_leader
from aimgraph.core.events import EpisodeLog
from aimgraph.core.types import GraphSettings, KinematicLimits
from aimgraph.dynamics.kinematics import VehicleState
from aimgraph.dynamics.world import World
from aimgraph.scenegraph.features import bearing, pair_distance

VERTEX_FEATURES = 3
EDGE_FEATURES = 2


class EdgeType(str, Enum):
    SAME_LANE = "same_lane"
    CROSSING = "crossing"


RELATIONS: Tuple[EdgeType, ...] = (EdgeType.SAME_LANE, EdgeType.CROSSING)


@dataclass(frozen=True, eq=False)
class SceneGraph:
    """Vehicles in the control zone and the typed edges between them.

    Vertex i carries ``vertex_features[i] = [s, v, a]``; edge k runs from
    ``src[k]`` to ``dst[k]`` with relation ``RELATIONS[edge_types[k]]`` and
    features ``[1/d, bearing]``. Edges are sorted by (src, dst, type).
    """

    vehicle_ids: Tuple[int, ...]
    vertex_features: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    edge_types: np.ndarray
    edge_features: np.ndarray
    normalized: bool = False

    @property
    def num_vertices(self) -> int:
        return len(self.vehicle_ids)

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    def index_of(self, vehicle_id: int) -> int:
        return self.vehicle_ids.index(vehicle_id)

    def edges(self) -> Iterator[Tuple[int, int, EdgeType, np.ndarray]]:
        for k in range(self.num_edges):
            yield int(self.src[k]), int(self.dst[k]), RELATIONS[int(self.edge_types[k])], self.edge_features[k]

    def permuted(self, order: Sequence[int]) -> "SceneGraph":
        """Graph with vertex ``order[i]`` of this graph placed at position i."""
        order = list(order)
        position = {old: new for new, old in enumerate(order)}
        edges = [
            (position[int(self.src[k])], position[int(self.dst[k])], int(self.edge_types[k]), self.edge_features[k])
            for k in range(self.num_edges)
        ]
        return _assemble(
            tuple(self.vehicle_ids[old] for old in order),
            self.vertex_features[order] if order else self.vertex_features,
            edges,
            self.normalized,
        )


def empty_graph() -> SceneGraph:
    return _assemble((), np.zeros((0, VERTEX_FEATURES)), [], normalized=True)


def build_graph(
    world: World,
    settings: GraphSettings = GraphSettings(),
    log: Optional[EpisodeLog] = None,
) -> SceneGraph:
    """Raw scene graph of the vehicles inside the control zone."""
    layout = world.layout
    vertices: List[VehicleState] = list(world.in_control_zone())
    index = {state.id: i for i, state in enumerate(vertices)}
    poses = [world.pose_of(state) for state in vertices]
    lanes = [world.route_of(state).lane_at(state.s) for state in vertices]

    features = np.array(
        [
            [state.s - world.route_of(state).control_entry_s, state.v, state.accel]
            for state in vertices
        ],
        dtype=float,
    ).reshape(len(vertices), VERTEX_FEATURES)

    def edge_features(i: int, j: int) -> np.ndarray:
        distance = pair_distance(poses[i], poses[j], settings.sigma_lon, settings.sigma_lat)
        inverse = 1.0 / distance if distance > 0.0 else settings.c_max
        return np.array([inverse, bearing(poses[i], poses[j], log)])

    crossing = RELATIONS.index(EdgeType.CROSSING)
    same_lane = RELATIONS.index(EdgeType.SAME_LANE)
    edges: List[Tuple[int, int, int, np.ndarray]] = []
    for i, first in enumerate(vertices):
        for j in range(i + 1, len(vertices)):
            second = vertices[j]
            relation = layout.crossing(first.route_id, second.route_id)
            if relation is None or lanes[i] == lanes[j]:
                continue
            if first.rear > relation.interval_a.end or second.rear > relation.interval_b.end:
                continue
            edges.append((i, j, crossing, edge_features(i, j)))
            edges.append((j, i, crossing, edge_features(j, i)))

    for j, follower in enumerate(vertices):
        leader = find_leader(follower, world)
        if leader is not None and leader.state.id in index:
            i = index[leader.state.id]
            edges.append((i, j, same_lane, edge_features(i, j)))

    return _assemble(tuple(state.id for state in vertices), features, edges, normalized=False)


def normalize_features(
    graph: SceneGraph,
    settings: GraphSettings = GraphSettings(),
    limits: KinematicLimits = KinematicLimits(),
) -> SceneGraph:
    if graph.normalized:
        return graph
    vertex = graph.vertex_features.copy()
    if vertex.size:
        vertex[:, 0] /= settings.control_zone_length
        vertex[:, 1] /= limits.v_max
        vertex[:, 2] /= limits.accel_scale
    edge = graph.edge_features.copy()
    if edge.size:
        edge[:, 0] = np.clip(edge[:, 0], 0.0, settings.c_max)
    return replace(graph, vertex_features=vertex, edge_features=edge, normalized=True)


def observe(
    world: World,
    settings: GraphSettings = GraphSettings(),
    limits: KinematicLimits = KinematicLimits(),
    log: Optional[EpisodeLog] = None,
) -> SceneGraph:
    return normalize_features(build_graph(world, settings, log), settings, limits)


def dump_graph(graph: SceneGraph, time: Optional[float] = None) -> Dict[str, Any]:
    """JSON-ready snapshot for visualisation tools."""
    payload: Dict[str, Any] = {
        "normalized": graph.normalized,
        "vehicles": list(graph.vehicle_ids),
        "vertex_features": graph.vertex_features.tolist(),
        "edges": [
            {
                "src": graph.vehicle_ids[src],
                "dst": graph.vehicle_ids[dst],
                "type": edge_type.value,
                "features": features.tolist(),
            }
            for src, dst, edge_type, features in graph.edges()
        ],
    }
    if time is not None:
        payload["time"] = time
    return payload


def _assemble(
    vehicle_ids: Tuple[int, ...],
    vertex_features: np.ndarray,
    edges: List[Tuple[int, int, int, np.ndarray]],
    normalized: bool,
) -> SceneGraph:
    edges = sorted(edges, key=lambda edge: (edge[0], edge[1], edge[2]))
    return SceneGraph(
        vehicle_ids=vehicle_ids,
        vertex_features=np.asarray(vertex_features, dtype=float).reshape(len(vehicle_ids), VERTEX_FEATURES),
        src=np.array([edge[0] for edge in edges], dtype=np.int64),
        dst=np.array([edge[1] for edge in edges], dtype=np.int64),
        edge_types=np.array([edge[2] for edge in edges], dtype=np.int64),
        edge_features=np.array([edge[3] for edge in edges], dtype=float).reshape(len(edges), EDGE_FEATURES),
        normalized=normalized,
    )
