from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from aimgraph.core.types import LAYOUT_KINDS
from aimgraph.geometry.conflicts import ConflictRelation, conflict_between
from aimgraph.geometry.routes import CONTROL_ZONE_LENGTH, PriorityClass, Route, TurnType
from aimgraph.geometry.segments import (
    ArcSegment,
    Pose,
    Segment,
    StraightSegment,
    wrap_angle,
)

logger = logging.getLogger(__name__)

LAYOUT_FORMAT_VERSION = 1
DATA_DIR = Path(__file__).parent / "data"
_POSITION_TOL = 1e-6
_HEADING_TOL = 1e-9


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Lane:
    id: str
    role: str
    start: Pose
    length: float
    priority: PriorityClass = PriorityClass.MAIN
    signal_group: Optional[str] = None

    @property
    def end(self) -> Pose:
        return StraightSegment(self.start, self.length).end


@dataclass(frozen=True, eq=False)
class IntersectionLayout:
    """Immutable description of one intersection geometry."""

    kind: str
    half_x: float
    half_y: float
    lanes: Mapping[str, Lane]
    routes: Tuple[Route, ...]
    conflicts: Mapping[Tuple[str, str], ConflictRelation]
    version: int = LAYOUT_FORMAT_VERSION
    _route_index: Dict[str, Route] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_route_index", {route.id: route for route in self.routes})

    def route(self, route_id: str) -> Route:
        try:
            return self._route_index[route_id]
        except KeyError as exc:
            raise LayoutError(f"unknown route {route_id!r} in layout {self.kind}") from exc

    @property
    def route_ids(self) -> Tuple[str, ...]:
        return tuple(route.id for route in self.routes)

    def conflict(self, route_a: str, route_b: str) -> Optional[ConflictRelation]:
        return self.conflicts.get((route_a, route_b))

    def crossing(self, route_a: str, route_b: str) -> Optional[ConflictRelation]:
        relation = self.conflicts.get((route_a, route_b))
        if relation is not None and relation.is_crossing:
            return relation
        return None

    def crossing_partners(self, route_id: str) -> Tuple[str, ...]:
        return tuple(
            other
            for other in self.route_ids
            if self.crossing(route_id, other) is not None
        )

    @property
    def approach_lanes(self) -> Tuple[str, ...]:
        return tuple(lane.id for lane in self.lanes.values() if lane.role == "approach")

    def routes_from(self, lane_id: str) -> Tuple[Route, ...]:
        return tuple(route for route in self.routes if route.approach_lane == lane_id)

    @property
    def signal_groups(self) -> Dict[str, str]:
        """Approach lane id to signal group."""
        return {
            lane.id: lane.signal_group
            for lane in self.lanes.values()
            if lane.role == "approach" and lane.signal_group
        }

    @property
    def spawn_points(self) -> Dict[str, float]:
        return {route.id: route.spawn_s for route in self.routes}

    @property
    def control_entries(self) -> Dict[str, float]:
        return {route.id: route.control_entry_s for route in self.routes}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "kind": self.kind,
            "box": {"half_x": self.half_x, "half_y": self.half_y},
            "lanes": [
                {
                    "id": lane.id,
                    "role": lane.role,
                    "start": [lane.start.x, lane.start.y],
                    "heading": lane.start.heading,
                    "length": lane.length,
                    "priority": lane.priority.value,
                    "signal_group": lane.signal_group,
                }
                for lane in self.lanes.values()
            ],
            "routes": [
                {
                    "id": route.id,
                    "approach": route.approach_lane,
                    "exit": route.exit_lane,
                    "turn": route.turn.value,
                    "priority": route.priority.value,
                    "length": route.length,
                    "halt_s": route.halt_s,
                    "box_exit_s": route.box_exit_s,
                    "control_entry_s": route.control_entry_s,
                    "segments": [_segment_to_dict(segment) for segment in route.segments],
                }
                for route in self.routes
            ],
            "conflicts": [
                {
                    "route_a": relation.route_a,
                    "route_b": relation.route_b,
                    "kind": relation.kind.value,
                    "interval_a": [relation.interval_a.begin, relation.interval_a.end],
                    "interval_b": [relation.interval_b.begin, relation.interval_b.end],
                }
                for (route_a, route_b), relation in sorted(self.conflicts.items())
            ],
        }


@lru_cache(maxsize=None)
def build_layout(kind: str, half_width: float = 1.0) -> IntersectionLayout:
    key = kind.upper()
    if key not in LAYOUT_KINDS:
        raise LayoutError(f"unknown layout kind {kind!r}; expected one of {LAYOUT_KINDS}")
    return load_layout_file(DATA_DIR / f"{key.lower()}.yaml", half_width=half_width)


def load_layout_file(path: Path | str, half_width: float = 1.0) -> IntersectionLayout:
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    return parse_layout(data, half_width=half_width)


def parse_layout(data: Mapping[str, Any], half_width: float = 1.0) -> IntersectionLayout:
    version = data.get("version")
    if version != LAYOUT_FORMAT_VERSION:
        raise LayoutError(f"unsupported layout version {version!r}")
    kind = str(data.get("kind", "custom"))
    box = data.get("box", {}) or {}

    lanes: Dict[str, Lane] = {}
    for item in data.get("lanes", []) or []:
        lane = _parse_lane(item)
        if lane.id in lanes:
            raise LayoutError(f"duplicate lane {lane.id!r}")
        lanes[lane.id] = lane

    routes: List[Route] = []
    for item in data.get("routes", []) or []:
        route = _build_route(item, lanes)
        if any(existing.id == route.id for existing in routes):
            raise LayoutError(f"duplicate route {route.id!r}")
        routes.append(route)
    if not routes:
        raise LayoutError(f"layout {kind} defines no routes")

    conflicts: Dict[Tuple[str, str], ConflictRelation] = {}
    for route_a, route_b in combinations(routes, 2):
        relation = conflict_between(route_a, route_b, half_width)
        if relation is None:
            continue
        conflicts[(route_a.id, route_b.id)] = relation
        conflicts[(route_b.id, route_a.id)] = relation.swapped()
    logger.debug("layout %s: %d routes, %d relations", kind, len(routes), len(conflicts) // 2)

    return IntersectionLayout(
        kind=kind,
        half_x=float(box.get("half_x", 0.0)),
        half_y=float(box.get("half_y", 0.0)),
        lanes=lanes,
        routes=tuple(routes),
        conflicts=conflicts,
        version=version,
    )


def derive_connector(entry: Pose, exit_pose: Pose) -> Tuple[Segment, ...]:
    """Straight-arc-straight path between two lane ends meeting at a right angle."""
    cos_h, sin_h = math.cos(entry.heading), math.sin(entry.heading)
    dx, dy = exit_pose.x - entry.x, exit_pose.y - entry.y
    forward = dx * cos_h + dy * sin_h
    lateral = -dx * sin_h + dy * cos_h
    turn = wrap_angle(exit_pose.heading - entry.heading)
    if forward <= 0.0:
        raise LayoutError("exit lane does not lie ahead of the approach lane")

    if abs(turn) < _HEADING_TOL:
        if abs(lateral) > _POSITION_TOL:
            raise LayoutError("parallel lanes are laterally offset")
        return (StraightSegment(entry, forward),)
    if abs(abs(turn) - math.pi / 2) > _HEADING_TOL or lateral * turn <= 0.0:
        raise LayoutError("connectors support only quarter turns towards the exit lane")

    radius = min(forward, abs(lateral))
    segments: List[Segment] = []
    pose = entry
    lead = forward - radius
    if lead > _POSITION_TOL:
        segments.append(StraightSegment(pose, lead))
        pose = segments[-1].end
    segments.append(ArcSegment(pose, radius * math.pi / 2, math.copysign(1.0 / radius, lateral)))
    pose = segments[-1].end
    tail = abs(lateral) - radius
    if tail > _POSITION_TOL:
        segments.append(StraightSegment(pose, tail))
    return tuple(segments)


def _parse_lane(item: Mapping[str, Any]) -> Lane:
    try:
        lane_id = str(item["id"])
        x, y = item["start"]
        heading = float(item["heading"])
        length = float(item["length"])
    except (KeyError, TypeError, ValueError) as exc:
        raise LayoutError(f"malformed lane entry {item!r}") from exc
    role = str(item.get("role", "approach"))
    if role not in ("approach", "exit"):
        raise LayoutError(f"lane {lane_id}: unknown role {role!r}")
    if length <= 0:
        raise LayoutError(f"lane {lane_id}: length must be positive")
    if role == "approach" and length < CONTROL_ZONE_LENGTH:
        raise LayoutError(f"lane {lane_id}: approach shorter than the control zone")
    try:
        priority = PriorityClass(item.get("priority", "main"))
    except ValueError as exc:
        raise LayoutError(f"lane {lane_id}: unknown priority {item.get('priority')!r}") from exc
    return Lane(
        id=lane_id,
        role=role,
        start=Pose(float(x), float(y), heading),
        length=length,
        priority=priority,
        signal_group=item.get("signal_group"),
    )


def _build_route(item: Mapping[str, Any], lanes: Mapping[str, Lane]) -> Route:
    route_id = str(item.get("id", ""))
    approach = lanes.get(item.get("approach", ""))
    exit_lane = lanes.get(item.get("exit", ""))
    if approach is None or approach.role != "approach":
        raise LayoutError(f"route {route_id}: unknown approach lane {item.get('approach')!r}")
    if exit_lane is None or exit_lane.role != "exit":
        raise LayoutError(f"route {route_id}: unknown exit lane {item.get('exit')!r}")
    try:
        turn = TurnType(item.get("turn", "through"))
    except ValueError as exc:
        raise LayoutError(f"route {route_id}: unknown turn {item.get('turn')!r}") from exc

    approach_segment = StraightSegment(approach.start, approach.length)
    if item.get("connector"):
        connector = _explicit_connector(route_id, approach_segment.end, item["connector"])
    else:
        connector = derive_connector(approach_segment.end, exit_lane.start)
    _check_joint(route_id, connector[-1].end, exit_lane.start)

    connector_length = sum(segment.length for segment in connector)
    return Route(
        id=route_id,
        segments=(approach_segment, *connector, StraightSegment(exit_lane.start, exit_lane.length)),
        approach_lane=approach.id,
        exit_lane=exit_lane.id,
        priority=approach.priority,
        turn=turn,
        halt_s=approach.length,
        box_exit_s=approach.length + connector_length,
    )


def _explicit_connector(
    route_id: str, start: Pose, items: List[Mapping[str, Any]]
) -> Tuple[Segment, ...]:
    segments: List[Segment] = []
    pose = start
    for item in items:
        kind = item.get("type")
        length = float(item.get("length", 0.0))
        if length <= 0:
            raise LayoutError(f"route {route_id}: connector segment length must be positive")
        if kind == "straight":
            segment: Segment = StraightSegment(pose, length)
        elif kind == "arc":
            segment = ArcSegment(pose, length, float(item.get("curvature", 0.0)))
        else:
            raise LayoutError(f"route {route_id}: unknown segment type {kind!r}")
        segments.append(segment)
        pose = segment.end
    return tuple(segments)


def _check_joint(route_id: str, end: Pose, start: Pose) -> None:
    if math.hypot(end.x - start.x, end.y - start.y) > _POSITION_TOL:
        raise LayoutError(f"route {route_id}: connector does not reach the exit lane")
    if abs(wrap_angle(end.heading - start.heading)) > _HEADING_TOL:
        raise LayoutError(f"route {route_id}: heading jump at the exit lane")


def _segment_to_dict(segment: Segment) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "type": "arc" if isinstance(segment, ArcSegment) else "straight",
        "start": [segment.start.x, segment.start.y],
        "heading": segment.start.heading,
        "length": segment.length,
    }
    if isinstance(segment, ArcSegment):
        payload["curvature"] = segment.curvature
    return payload
